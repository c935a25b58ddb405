//! Store-and-forward relay that sits on one path and shapes it.
//!
//! Downstream (sender to receiver) traffic is parsed chunk by chunk and each
//! data chunk is held per the channel's [`Shaper`]; terminal chunks pass
//! straight through. Upstream request frames are copied raw.

use super::shaper::{ChannelConfig, Shaper};
use super::wire::{read_chunk, write_chunk};
use crate::error::Result;
use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

/// Connects with retries; the peer may still be starting up.
pub fn connect_retry(addr: SocketAddr, patience: Duration) -> Result<TcpStream> {
    let deadline = Instant::now() + patience;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) if Instant::now() < deadline => {
                let _ = e;
                thread::sleep(Duration::from_millis(20));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Serves one sender session: accepts the upstream connection, connects to
/// `forward`, relays until the sender hangs up.
pub fn serve_relay(listener: &TcpListener, forward: SocketAddr, config: ChannelConfig, seed: u64) -> Result<()> {
    config.validate()?;
    let (mut upstream, _) = listener.accept()?;
    upstream.set_nodelay(true)?;
    let mut downstream = connect_retry(forward, Duration::from_secs(10))?;

    let mut requests_in = downstream.try_clone()?;
    let mut requests_out = upstream.try_clone()?;
    let back = thread::spawn(move || {
        let r = io::copy(&mut requests_in, &mut requests_out);
        let _ = requests_out.shutdown(Shutdown::Write);
        r
    });

    let mut shaper: Option<(u32, Shaper)> = None;
    let forward_result = (|| -> Result<()> {
        while let Some((header, payload)) = read_chunk(&mut upstream)? {
            if !header.is_terminal() {
                let ready = Instant::now();
                let s = match &mut shaper {
                    Some((t, s)) if *t == header.trial_id => s,
                    _ => {
                        let s = Shaper::for_trial(config, seed, header.trial_id, header.channel);
                        &mut shaper.insert((header.trial_id, s)).1
                    }
                };
                s.hold(ready, payload.len());
            }
            write_chunk(&mut downstream, &header, &payload)?;
        }
        Ok(())
    })();
    let _ = downstream.shutdown(Shutdown::Both);
    let copied = back.join().expect("relay upstream thread panicked");
    forward_result?;
    copied?;
    Ok(())
}
