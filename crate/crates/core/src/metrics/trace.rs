//! Trace files: one CSV row per observation event.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::engine::{EventKind, Observer, TraceEvent};
use crate::radio::{Channel, ChannelOutcome, Payload};

pub const TRACE_HEADER: [&str; 8] = [
    "trial_id",
    "slot",
    "node_id",
    "protocol_phase_label",
    "action_kind",
    "channel",
    "outcome_kind",
    "status_after",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trial_id: u64,
    pub slot: u64,
    pub node_id: usize,
    pub protocol_phase_label: String,
    pub action_kind: String,
    pub channel: Option<u32>,
    pub outcome_kind: String,
    pub status_after: String,
}

impl TraceRow {
    pub fn from_event(trial_id: u64, ev: &TraceEvent) -> Self {
        let (action, channel, outcome) = match ev.kind {
            EventKind::Init => ("init", None, ""),
            EventKind::Listen { channel, outcome } => (
                "listen",
                Some(channel.0),
                match outcome {
                    ChannelOutcome::Silence => "silence",
                    ChannelOutcome::Message(Payload::Data) => "message",
                    ChannelOutcome::Message(Payload::Beacon) => "beacon",
                    ChannelOutcome::Noise => "noise",
                },
            ),
            EventKind::Broadcast { channel, payload } => (
                match payload {
                    Payload::Data => "broadcast",
                    Payload::Beacon => "beacon",
                },
                Some(channel.0),
                "",
            ),
            EventKind::Boundary => ("boundary", None, ""),
            EventKind::End { capped } => ("end", None, if capped { "cap" } else { "complete" }),
        };
        TraceRow {
            trial_id,
            slot: ev.slot,
            node_id: ev.node,
            protocol_phase_label: ev.label.to_string(),
            action_kind: action.into(),
            channel,
            outcome_kind: outcome.into(),
            status_after: ev.status_after.name().into(),
        }
    }

    pub fn to_event(&self) -> Result<TraceEvent, MetricsError> {
        let bad = |what: &str| MetricsError::BadRow {
            slot: self.slot,
            node: self.node_id,
            msg: what.to_string(),
        };
        let channel = || self.channel.map(Channel).ok_or_else(|| bad("missing channel"));
        let kind = match self.action_kind.as_str() {
            "init" => EventKind::Init,
            "boundary" => EventKind::Boundary,
            "broadcast" => EventKind::Broadcast { channel: channel()?, payload: Payload::Data },
            "beacon" => EventKind::Broadcast { channel: channel()?, payload: Payload::Beacon },
            "listen" => EventKind::Listen {
                channel: channel()?,
                outcome: match self.outcome_kind.as_str() {
                    "silence" => ChannelOutcome::Silence,
                    "message" => ChannelOutcome::Message(Payload::Data),
                    "beacon" => ChannelOutcome::Message(Payload::Beacon),
                    "noise" => ChannelOutcome::Noise,
                    other => return Err(bad(&format!("unknown outcome {other:?}"))),
                },
            },
            "end" => EventKind::End {
                capped: match self.outcome_kind.as_str() {
                    "cap" => true,
                    "complete" => false,
                    other => return Err(bad(&format!("unknown end marker {other:?}"))),
                },
            },
            other => return Err(bad(&format!("unknown action {other:?}"))),
        };
        Ok(TraceEvent {
            slot: self.slot,
            node: self.node_id,
            label: self.protocol_phase_label.parse().map_err(|e: String| bad(&e))?,
            kind,
            status_after: self.status_after.parse().map_err(|e: String| bad(&e))?,
        })
    }
}

/// Streams trace rows to a CSV sink.
pub struct TraceWriter<W: Write> {
    trial_id: u64,
    out: csv::Writer<W>,
    error: Option<csv::Error>,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: &Path, trial_id: u64) -> Result<Self, MetricsError> {
        let file = File::create(path).map_err(|e| MetricsError::Io(path.display().to_string(), e))?;
        Ok(TraceWriter::new(BufWriter::new(file), trial_id))
    }
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W, trial_id: u64) -> Self {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        let error = out.write_record(TRACE_HEADER).err();
        TraceWriter { trial_id, out, error }
    }

    /// Flushes and returns the sink, or the first write error.
    pub fn finish(mut self) -> Result<W, MetricsError> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.out.flush().map_err(csv::Error::from)?;
        self.out.into_inner().map_err(|e| MetricsError::Csv(csv::Error::from(e.into_error())))
    }
}

impl<W: Write> Observer for TraceWriter<W> {
    fn wants_actions(&self) -> bool {
        true
    }

    fn event(&mut self, ev: &TraceEvent) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = self.out.serialize(TraceRow::from_event(self.trial_id, ev)) {
            self.error = Some(e);
        }
    }
}

pub fn read_trace<R: Read>(src: R) -> Result<Vec<TraceRow>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(src);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(MetricsError::BadHeader(header.join(",")));
    }
    rdr.deserialize().map(|r| r.map_err(MetricsError::from)).collect()
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>, MetricsError> {
    let file = File::open(path).map_err(|e| MetricsError::Io(path.display().to_string(), e))?;
    read_trace(file)
}
