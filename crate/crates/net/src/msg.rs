//! Control messages exchanged between a master and its worker nodes.
//!
//! Each message is one tagged payload: a type byte followed by big-endian
//! fields. Polynomials travel in their canonical binary encoding.

use crate::error::{NetError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Msg {
    Hello { node: u32, threads: u32 },
    Request { thread: u32 },
    Pair { i: u64, j: u64, seq: u64 },
    /// `poly` is `None` for a zero remainder.
    Result { thread: u32, seq: u64, poly: Option<Vec<u8>> },
    Ack { seq: u64 },
    Term,
}

const HELLO: u8 = 0;
const REQUEST: u8 = 1;
const PAIR: u8 = 2;
const RESULT: u8 = 3;
const ACK: u8 = 4;
const TERM: u8 = 5;

/// Encoded size of a PAIR message.
pub const PAIR_LEN: usize = 25;

impl Msg {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Msg::Hello { node, threads } => {
                out.push(HELLO);
                out.extend_from_slice(&node.to_be_bytes());
                out.extend_from_slice(&threads.to_be_bytes());
            }
            Msg::Request { thread } => {
                out.push(REQUEST);
                out.extend_from_slice(&thread.to_be_bytes());
            }
            Msg::Pair { i, j, seq } => {
                out.push(PAIR);
                out.extend_from_slice(&i.to_be_bytes());
                out.extend_from_slice(&j.to_be_bytes());
                out.extend_from_slice(&seq.to_be_bytes());
            }
            Msg::Result { thread, seq, poly } => {
                out.push(RESULT);
                out.extend_from_slice(&thread.to_be_bytes());
                out.extend_from_slice(&seq.to_be_bytes());
                match poly {
                    None => out.push(1),
                    Some(p) => {
                        out.push(0);
                        out.extend_from_slice(p);
                    }
                }
            }
            Msg::Ack { seq } => {
                out.push(ACK);
                out.extend_from_slice(&seq.to_be_bytes());
            }
            Msg::Term => out.push(TERM),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Msg> {
        let (&ty, mut rest) = bytes.split_first().ok_or_else(|| NetError::protocol("empty message"))?;
        let msg = match ty {
            HELLO => Msg::Hello { node: u32_at(&mut rest)?, threads: u32_at(&mut rest)? },
            REQUEST => Msg::Request { thread: u32_at(&mut rest)? },
            PAIR => Msg::Pair { i: u64_at(&mut rest)?, j: u64_at(&mut rest)?, seq: u64_at(&mut rest)? },
            RESULT => {
                let thread = u32_at(&mut rest)?;
                let seq = u64_at(&mut rest)?;
                let (&zero, body) = rest.split_first().ok_or_else(|| NetError::protocol("truncated result"))?;
                rest = &[];
                let poly = match zero {
                    1 if body.is_empty() => None,
                    0 => Some(body.to_vec()),
                    _ => return Err(NetError::protocol("malformed zero flag")),
                };
                Msg::Result { thread, seq, poly }
            }
            ACK => Msg::Ack { seq: u64_at(&mut rest)? },
            TERM => Msg::Term,
            t => return Err(NetError::protocol(format!("unknown message type {t}"))),
        };
        if !rest.is_empty() {
            return Err(NetError::protocol("trailing bytes in message"));
        }
        Ok(msg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Msg::Hello { .. } => "HELLO",
            Msg::Request { .. } => "REQUEST",
            Msg::Pair { .. } => "PAIR",
            Msg::Result { .. } => "RESULT",
            Msg::Ack { .. } => "ACK",
            Msg::Term => "TERM",
        }
    }
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(NetError::protocol("truncated message"));
    }
    let (head, tail) = input.split_at(n);
    *input = tail;
    Ok(head)
}

fn u32_at(input: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_be_bytes(take(input, 4)?.try_into().unwrap()))
}

fn u64_at(input: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_be_bytes(take(input, 8)?.try_into().unwrap()))
}
