//! Byte-level mutation of parser inputs.

use rand::seq::IndexedRandom;
use rand::Rng;

const SNIPPETS: [&[u8]; 14] = [
    b"<",
    b">",
    b"/>",
    b"</actor>",
    b"<dependency>",
    b"<depender iref=\"x\" aref=\"y\"/>",
    b"\"",
    b"&",
    b"&#0;",
    b"&bogus;",
    b"<![CDATA[",
    b"<!--",
    b"<?xml version=\"1.0\" encoding=\"UTF-16\"?>",
    b"\xff\xfe",
];

/// Applies one to four random edits to `input`.
pub fn mutate<R: Rng>(input: &[u8], rng: &mut R) -> Vec<u8> {
    let mut out = input.to_vec();
    for _ in 0..rng.random_range(1..=4) {
        let len = out.len();
        let at = if len == 0 { 0 } else { rng.random_range(0..=len) };
        match rng.random_range(0..7) {
            0 if len > 0 => {
                let i = at.min(len - 1);
                out[i] = rng.random();
            }
            1 if len > 0 => {
                let end = (at + rng.random_range(1..=32)).min(len);
                out.drain(at.min(end)..end);
            }
            2 if len > 0 => {
                let end = (at + rng.random_range(1..=64)).min(len);
                let chunk = out[at.min(end)..end].to_vec();
                let to = rng.random_range(0..=out.len());
                out.splice(to..to, chunk);
            }
            3 => {
                let snippet = SNIPPETS.choose(rng).unwrap();
                out.splice(at..at, snippet.iter().copied());
            }
            4 => out.truncate(at),
            5 if len > 1 => {
                let i = at.min(len - 1);
                let j = rng.random_range(0..len);
                out.swap(i, j);
            }
            _ => {
                let bytes: Vec<u8> = (0..rng.random_range(1..8)).map(|_| rng.random()).collect();
                out.splice(at..at, bytes);
            }
        }
    }
    out
}
