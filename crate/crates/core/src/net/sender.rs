use super::relay::connect_retry;
use super::shaper::{ChannelConfig, Shaper};
use super::wire::{
    crc32, payload_for_trial, read_request, split_payload, write_chunk, ChannelId, ChunkHeader, TrialRequest,
};
use crate::error::{Error, Result};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenderConfig {
    /// Channel A then channel B. A channel with `via_relay` is not shaped here.
    pub channels: [ChannelConfig; 2],
    pub chunk_size: usize,
    pub shaping_seed: u64,
}

impl SenderConfig {
    pub fn validate(&self) -> Result<()> {
        for c in &self.channels {
            c.validate()?;
        }
        if self.chunk_size == 0 || self.chunk_size > super::wire::MAX_CHUNK_LEN as usize {
            return Err(Error::Domain(format!("chunk size {} out of range", self.chunk_size)));
        }
        Ok(())
    }
}

type PayloadKey = (u64, u32, u64);

/// Both channel threads need the same payload and checksum for a trial;
/// whichever asks first generates it.
#[derive(Default)]
struct PayloadCache {
    slot: Mutex<Option<(PayloadKey, Arc<Vec<u8>>, u32)>>,
}

impl PayloadCache {
    fn get(&self, req: &TrialRequest) -> (Arc<Vec<u8>>, u32) {
        let key = (req.payload_seed, req.trial_id, req.payload_size);
        let mut slot = self.slot.lock().expect("payload cache poisoned");
        if let Some((k, data, crc)) = slot.as_ref() {
            if *k == key {
                return (Arc::clone(data), *crc);
            }
        }
        let data = Arc::new(payload_for_trial(req.payload_seed, req.trial_id, req.payload_size));
        let crc = crc32(&data);
        *slot = Some((key, Arc::clone(&data), crc));
        (data, crc)
    }
}

pub struct Sender {
    links: [TcpStream; 2],
    config: SenderConfig,
}

impl Sender {
    /// `targets[c]` is the receiver itself or the relay in front of it.
    pub fn connect(targets: [SocketAddr; 2], config: SenderConfig) -> Result<Self> {
        config.validate()?;
        let a = connect_retry(targets[0], Duration::from_secs(10))?;
        let b = connect_retry(targets[1], Duration::from_secs(10))?;
        Ok(Sender { links: [a, b], config })
    }

    /// Answers trial requests on both links until the receiver hangs up.
    pub fn serve(self) -> Result<()> {
        let cache = PayloadCache::default();
        let config = self.config;
        let [a, b] = self.links;
        thread::scope(|scope| {
            let ha = scope.spawn(|| serve_link(a, ChannelId::A, &config, &cache));
            let hb = scope.spawn(|| serve_link(b, ChannelId::B, &config, &cache));
            let ra = ha.join().expect("sender thread panicked");
            let rb = hb.join().expect("sender thread panicked");
            ra.and(rb)
        })
    }
}

fn serve_link(mut link: TcpStream, channel: ChannelId, config: &SenderConfig, cache: &PayloadCache) -> Result<()> {
    let path = config.channels[channel.index()];
    let result = (|| -> Result<()> {
        while let Some(req) = read_request(&mut link)? {
            if req.channel != channel {
                return Err(Error::Protocol(format!("request for {:?} arrived on {:?} link", req.channel, channel)));
            }
            send_trial(&mut link, &req, path, config, cache)?;
        }
        Ok(())
    })();
    let _ = link.shutdown(Shutdown::Both);
    result
}

fn send_trial(
    link: &mut TcpStream,
    req: &TrialRequest,
    path: ChannelConfig,
    config: &SenderConfig,
    cache: &PayloadCache,
) -> Result<()> {
    let ready = Instant::now();
    let (payload, crc) = cache.get(req);
    let (bytes_a, _) = split_payload(req.payload_size, req.fraction)?;
    let range = match req.channel {
        ChannelId::A => 0..bytes_a as usize,
        ChannelId::B => bytes_a as usize..payload.len(),
    };
    let mut shaper = (!path.via_relay).then(|| Shaper::for_trial(path, config.shaping_seed, req.trial_id, req.channel));
    let mut header = ChunkHeader { channel: req.channel, trial_id: req.trial_id, fraction: req.fraction, offset: 0, length: 0 };
    let mut offset = range.start;
    while offset < range.end {
        let end = (offset + config.chunk_size).min(range.end);
        if let Some(s) = shaper.as_mut() {
            s.hold(ready, end - offset);
        }
        header.offset = offset as u64;
        header.length = (end - offset) as u32;
        write_chunk(link, &header, &payload[offset..end])?;
        offset = end;
    }
    header.offset = crc as u64;
    header.length = 0;
    write_chunk(link, &header, &[])?;
    Ok(())
}
