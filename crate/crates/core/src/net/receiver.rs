use super::wire::{crc32, payload_for_trial, read_chunk, split_payload, write_request, ChannelId, TrialRequest, MAX_PAYLOAD};
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;
use std::io;
use std::net::{Shutdown, TcpListener, TcpStream};
use std::ops::Range;
use std::thread;
use std::time::{Duration, Instant};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    /// Checksum or byte mismatch, or chunks outside the channel's range.
    Integrity,
    Timeout,
    /// Connection failure or malformed framing.
    Io,
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Integrity => "integrity",
            TrialStatus::Timeout => "timeout",
            TrialStatus::Io => "io",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: u32,
    pub fraction: f64,
    /// Nanoseconds on the receiver's monotonic clock.
    pub t_request_ns: u64,
    pub t_last_packet_ns: u64,
    pub completion_ns: u64,
    pub bytes_a: u64,
    pub bytes_b: u64,
    pub status: TrialStatus,
    /// Arrival of each channel's terminal chunk, relative to the request.
    /// Zero for a failed channel.
    pub channel_ns: [u64; 2],
}

impl TrialRecord {
    pub fn ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }

    pub fn completion_secs(&self) -> f64 {
        self.completion_ns as f64 / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub payload_size: u64,
    pub payload_seed: u64,
    pub timeout: Duration,
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.payload_size > MAX_PAYLOAD {
            return Err(Error::Resource(format!("payload {} exceeds the {MAX_PAYLOAD} byte desk limit", self.payload_size)));
        }
        if self.timeout.is_zero() {
            return Err(Error::Domain("timeout must be positive".into()));
        }
        Ok(())
    }
}

struct Receipt {
    data: Vec<u8>,
    crc: u64,
    last: Instant,
}

/// Drives trials: requests both halves at one instant, reassembles, verifies.
pub struct Receiver {
    links: [TcpStream; 2],
    config: ReceiverConfig,
    epoch: Instant,
    broken: bool,
}

impl Receiver {
    /// Accepts the channel-A and channel-B connections, in that order.
    pub fn accept(listeners: [&TcpListener; 2], config: ReceiverConfig) -> Result<Self> {
        config.validate()?;
        let mut links = Vec::with_capacity(2);
        for l in listeners {
            let (s, _) = l.accept()?;
            s.set_nodelay(true)?;
            s.set_read_timeout(Some(config.timeout))?;
            links.push(s);
        }
        let [a, b]: [TcpStream; 2] = links.try_into().expect("two links");
        Ok(Receiver { links: [a, b], config, epoch: Instant::now(), broken: false })
    }

    pub fn config(&self) -> &ReceiverConfig {
        &self.config
    }

    /// Runs one trial. Failures are reported in the record's status; once a
    /// link has failed mid-stream the framing cannot be trusted, so every
    /// later trial is marked `Io` without touching the network.
    pub fn run_trial(&mut self, fraction: f64, trial_id: u32) -> Result<TrialRecord> {
        let size = self.config.payload_size;
        let (bytes_a, bytes_b) = split_payload(size, fraction)?;
        let mut record = TrialRecord {
            trial_id,
            fraction,
            t_request_ns: 0,
            t_last_packet_ns: 0,
            completion_ns: 0,
            bytes_a,
            bytes_b,
            status: TrialStatus::Io,
            channel_ns: [0, 0],
        };
        if self.broken {
            return Ok(record);
        }
        let ranges = [0..bytes_a as usize, bytes_a as usize..size as usize];

        let t_request = Instant::now();
        record.t_request_ns = self.ns_since_epoch(t_request);
        for (c, link) in self.links.iter_mut().enumerate() {
            let req = TrialRequest {
                channel: if c == 0 { ChannelId::A } else { ChannelId::B },
                trial_id,
                fraction,
                payload_size: size,
                payload_seed: self.config.payload_seed,
            };
            if let Err(e) = write_request(link, &req) {
                self.broken = true;
                record.status = classify(&e);
                return Ok(record);
            }
        }

        let [la, lb] = &mut self.links;
        let (ra, rb) = thread::scope(|scope| {
            let ha = scope.spawn(|| collect(la, ChannelId::A, trial_id, ranges[0].clone()));
            let hb = scope.spawn(|| collect(lb, ChannelId::B, trial_id, ranges[1].clone()));
            (ha.join().expect("receiver thread panicked"), hb.join().expect("receiver thread panicked"))
        });
        let (a, b) = match (ra, rb) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                if !matches!(e, Error::Integrity(_)) {
                    self.broken = true;
                }
                record.status = classify(&e);
                return Ok(record);
            }
        };

        let last = a.last.max(b.last);
        record.t_last_packet_ns = self.ns_since_epoch(last);
        record.completion_ns = (last - t_request).as_nanos() as u64;
        record.channel_ns = [(a.last - t_request).as_nanos() as u64, (b.last - t_request).as_nanos() as u64];

        let expected = payload_for_trial(self.config.payload_seed, trial_id, size);
        let expected_crc = crc32(&expected);
        let mut received = a.data;
        received.extend_from_slice(&b.data);
        record.status = if received != expected || crc32(&received) != expected_crc || a.crc != expected_crc as u64 || b.crc != expected_crc as u64 {
            TrialStatus::Integrity
        } else {
            TrialStatus::Ok
        };
        Ok(record)
    }

    /// Closes both links; the sender and any relays wind down on EOF.
    pub fn close(self) {
        for l in &self.links {
            let _ = l.shutdown(Shutdown::Both);
        }
    }

    fn ns_since_epoch(&self, t: Instant) -> u64 {
        (t - self.epoch).as_nanos() as u64
    }
}

fn classify(e: &Error) -> TrialStatus {
    match e {
        Error::Integrity(_) => TrialStatus::Integrity,
        Error::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => TrialStatus::Timeout,
        _ => TrialStatus::Io,
    }
}

/// Reads one channel's chunks for `trial_id` up to and including its
/// terminal chunk. Frames left over from earlier trials are skipped.
fn collect(link: &mut TcpStream, channel: ChannelId, trial_id: u32, range: Range<usize>) -> Result<Receipt> {
    let mut data = Vec::with_capacity(range.len());
    loop {
        let (header, payload) = read_chunk(link)?
            .ok_or_else(|| Error::Protocol(format!("channel {channel:?} closed during trial {trial_id}")))?;
        if header.trial_id < trial_id {
            continue;
        }
        if header.trial_id > trial_id {
            return Err(Error::Protocol(format!("chunk for future trial {} during trial {trial_id}", header.trial_id)));
        }
        if header.channel != channel {
            return Err(Error::Integrity(format!("chunk tagged {:?} on the {channel:?} link", header.channel)));
        }
        if header.is_terminal() {
            if data.len() != range.len() {
                return Err(Error::Integrity(format!(
                    "channel {channel:?} delivered {} of {} bytes",
                    data.len(),
                    range.len()
                )));
            }
            return Ok(Receipt { data, crc: header.offset, last: Instant::now() });
        }
        let expected_offset = (range.start + data.len()) as u64;
        if header.offset != expected_offset || data.len() + payload.len() > range.len() {
            return Err(Error::Integrity(format!(
                "channel {channel:?} chunk at offset {} (len {}) outside expected range",
                header.offset, header.length
            )));
        }
        data.extend_from_slice(&payload);
    }
}
