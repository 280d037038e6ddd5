//! Line-oriented session loop shared by `serve` and `replay`.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};

use crate::engine::{Driver, OutputAction};
use crate::gateway::wire::{decode_event, encode_action, encode_error, ErrorRecord, WireError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub events: u64,
    pub actions: u64,
    pub errors: u64,
}

/// Runs one meeting: each input line is decoded, fed to the engine, and
/// answered with zero or more action records. Bad lines produce an `error`
/// record and leave the meeting untouched.
pub fn serve_session<R: BufRead, W: Write>(reader: R, mut writer: W) -> io::Result<SessionStats> {
    let mut driver = Driver::new();
    let mut stats = SessionStats::default();
    let mut last_t_ms = 0;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index as u64 + 1;
        let fail = |error: WireError, t_ms: u64| ErrorRecord {
            t_ms,
            error,
            line: Some(line_no),
        };
        let result = decode_event(&line)
            .and_then(|event| {
                if event.t_ms() < last_t_ms {
                    Err(WireError::new(
                        "t_ms",
                        format!("{} precedes the previous record at {last_t_ms}", event.t_ms()),
                    ))
                } else {
                    Ok(event)
                }
            })
            .and_then(|event| {
                driver
                    .feed(&event)
                    .map(|actions| (event.t_ms(), actions))
                    .map_err(|e| WireError::new("event", e.to_string()))
            });
        match result {
            Ok((t_ms, actions)) => {
                stats.events += 1;
                last_t_ms = t_ms;
                write_actions(&mut writer, &actions)?;
                stats.actions += actions.len() as u64;
            }
            Err(error) => {
                stats.errors += 1;
                writeln!(writer, "{}", encode_error(&fail(error, last_t_ms)))?;
            }
        }
        writer.flush()?;
    }
    Ok(stats)
}

pub fn write_actions<W: Write>(writer: &mut W, actions: &[OutputAction]) -> io::Result<()> {
    for action in actions {
        writeln!(writer, "{}", encode_action(action))?;
    }
    Ok(())
}

/// Accepts connections one at a time; each connection is one meeting.
pub fn serve_tcp(addr: impl ToSocketAddrs) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    eprintln!("listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = stream?;
        let peer = stream.peer_addr()?;
        let reader = BufReader::new(stream.try_clone()?);
        match serve_session(reader, stream) {
            Ok(stats) => eprintln!(
                "{peer}: {} event(s), {} action(s), {} error(s)",
                stats.events, stats.actions, stats.errors
            ),
            Err(e) => eprintln!("{peer}: {e}"),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::wire::{decode_record, WireRecord};

    const START: &str = r#"{"v":1,"type":"meeting_start","t_ms":0,"payload":{"config":{"scheduled_duration":60},"roster":[{"id":"H","role":"host"},{"id":"A","role":"member"}]}}"#;

    fn session(input: &str) -> (SessionStats, Vec<WireRecord>) {
        let mut out = Vec::new();
        let stats = serve_session(input.as_bytes(), &mut out).unwrap();
        let records = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| decode_record(l).unwrap())
            .collect();
        (stats, records)
    }

    #[test]
    fn bad_lines_get_error_records_and_the_session_continues() {
        let input = format!(
            "{START}\n\
             {{\"v\":1,\"type\":\"voice\",\"payload\":{{\"p\":\"A\",\"active\":true}}}}\n\
             {{\"v\":1,\"type\":\"voice\",\"t_ms\":500,\"payload\":{{\"p\":\"Z\",\"active\":true}}}}\n\
             \n\
             {{\"v\":1,\"type\":\"tick\",\"t_ms\":1000,\"payload\":{{\"t\":1}}}}\n\
             {{\"v\":1,\"type\":\"voice\",\"t_ms\":400,\"payload\":{{\"p\":\"A\",\"active\":true}}}}\n"
        );
        let (stats, records) = session(&input);
        assert_eq!(stats.events, 2);
        assert_eq!(stats.errors, 3);
        let errors: Vec<_> = records
            .iter()
            .filter_map(|r| match r {
                WireRecord::Error(e) => Some((e.error.field.as_str(), e.line)),
                _ => None,
            })
            .collect();
        assert_eq!(errors, vec![("t_ms", Some(2)), ("event", Some(3)), ("t_ms", Some(6))]);
    }

    #[test]
    fn events_before_start_are_rejected() {
        let (stats, records) = session(r#"{"v":1,"type":"tick","t_ms":1000,"payload":{"t":1}}"#);
        assert_eq!(stats.errors, 1);
        assert!(matches!(&records[0], WireRecord::Error(e) if e.error.field == "event"));
    }
}
