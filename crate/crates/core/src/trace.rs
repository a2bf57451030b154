//! Event trace emission.
//!
//! One CSV row per event. Fields that do not apply to an event are left
//! empty. Rows come out in simulation order, so reruns are byte-identical.

use std::io::{self, Write};

use crate::config::{ChannelId, Cycle, NodeId};

pub const TRACE_HEADER: &str = "cycle,event,node,peer,channel,packet_id";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Inject,
    Drop,
    Start,
    AckOk,
    NoAck,
    ErrAck,
    Deliver,
    TokenPass,
    Nack,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Inject => "INJECT",
            TraceEvent::Drop => "DROP",
            TraceEvent::Start => "START",
            TraceEvent::AckOk => "ACK_OK",
            TraceEvent::NoAck => "NO_ACK",
            TraceEvent::ErrAck => "ERR_ACK",
            TraceEvent::Deliver => "DELIVER",
            TraceEvent::TokenPass => "TOKEN_PASS",
            TraceEvent::Nack => "NACK",
        }
    }
}

/// Sink for trace rows; a disabled sink costs one branch per event.
pub struct TraceSink<'a> {
    out: Option<&'a mut dyn Write>,
}

impl<'a> TraceSink<'a> {
    pub fn disabled() -> Self {
        TraceSink { out: None }
    }

    pub fn new(out: &'a mut dyn Write) -> io::Result<Self> {
        writeln!(out, "{TRACE_HEADER}")?;
        Ok(TraceSink { out: Some(out) })
    }

    pub fn enabled(&self) -> bool {
        self.out.is_some()
    }

    pub fn row(
        &mut self,
        cycle: Cycle,
        event: TraceEvent,
        node: NodeId,
        peer: Option<NodeId>,
        channel: Option<ChannelId>,
        packet_id: Option<u64>,
    ) -> io::Result<()> {
        let Some(out) = self.out.as_mut() else {
            return Ok(());
        };
        write!(out, "{cycle},{},{node},", event.as_str())?;
        match peer {
            Some(p) => write!(out, "{p},")?,
            None => write!(out, ",")?,
        }
        match channel {
            Some(c) => write!(out, "{c},")?,
            None => write!(out, ",")?,
        }
        match packet_id {
            Some(id) => writeln!(out, "{id}"),
            None => writeln!(out),
        }
    }
}
