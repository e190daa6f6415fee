//! Line-delimited JSON transition files.
//!
//! The first line is a [`FileHeader`]; every following line is one
//! transition. Floats are written in shortest round-trip form, so decoding
//! reproduces the encoded values bit for bit.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DemoSet, Episode, Origin, Transition};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileHeader {
    pub env_name: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    #[serde(rename = "R")]
    pub sparse_reward: f64,
    /// Number of episodes in the file.
    pub demo_count: usize,
    #[serde(rename = "N")]
    pub avg_length: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    episode_id: u64,
    step_index: usize,
    s: Vec<f64>,
    a: Vec<f64>,
    r: f64,
    s2: Vec<f64>,
    done: bool,
    origin: Origin,
}

fn to_f64<T: Real>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<T: Real>(xs: Vec<f64>) -> Vec<T> {
    xs.into_iter().map(T::of).collect()
}

pub fn encode_transitions<T: Real, W: Write>(
    w: &mut W,
    header: &FileHeader,
    transitions: &[Transition<T>],
) -> Result<()> {
    let to_io = |e: serde_json::Error| Error::Io(e.into());
    serde_json::to_writer(&mut *w, header).map_err(to_io)?;
    w.write_all(b"\n")?;
    for t in transitions {
        let record = Record {
            episode_id: t.episode_id,
            step_index: t.step_index,
            s: to_f64(&t.state),
            a: to_f64(&t.action),
            r: t.reward.as_f64(),
            s2: to_f64(&t.next_state),
            done: t.done,
            origin: t.origin,
        };
        serde_json::to_writer(&mut *w, &record).map_err(to_io)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a transition file. Errors carry the 1-based line number; record
/// index `k` sits on line `k + 2`.
pub fn decode_transitions<T: Real, R: BufRead>(r: R) -> Result<(FileHeader, Vec<Transition<T>>)> {
    let mut lines = r.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "missing header record".into() })??;
    let header: FileHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;

    let mut out = Vec::new();
    let mut episodes = BTreeSet::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, msg: format!("record {k}: {e}") })?;
        let dims_ok = rec.s.len() == header.obs_dim
            && rec.s2.len() == header.obs_dim
            && rec.a.len() == header.act_dim;
        if !dims_ok {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("record {k}: dimensions do not match the header"),
            });
        }
        episodes.insert(rec.episode_id);
        out.push(Transition {
            state: from_f64(rec.s),
            action: from_f64(rec.a),
            reward: T::of(rec.r),
            next_state: from_f64(rec.s2),
            done: rec.done,
            origin: rec.origin,
            episode_id: rec.episode_id,
            step_index: rec.step_index,
        });
    }
    if episodes.len() != header.demo_count {
        return Err(Error::Parse {
            line: out.len() + 1,
            msg: format!(
                "record {}: stream ends after {} of {} episodes",
                out.len().saturating_sub(1),
                episodes.len(),
                header.demo_count
            ),
        });
    }
    Ok((header, out))
}

/// Groups consecutive transitions into episodes. An episode that does not end
/// in success is taken to have timed out.
pub fn group_episodes<T: Real>(transitions: Vec<Transition<T>>) -> Result<Vec<Episode<T>>> {
    let mut episodes = Vec::new();
    let mut current: Vec<Transition<T>> = Vec::new();
    let flush = |current: &mut Vec<Transition<T>>, episodes: &mut Vec<Episode<T>>| -> Result<()> {
        if !current.is_empty() {
            let steps = std::mem::take(current);
            let timed_out = !steps.last().unwrap().done;
            episodes.push(Episode::new(steps, timed_out)?);
        }
        Ok(())
    };
    for t in transitions {
        if current.first().is_some_and(|c| c.episode_id != t.episode_id) {
            flush(&mut current, &mut episodes)?;
        }
        current.push(t);
    }
    flush(&mut current, &mut episodes)?;
    Ok(episodes)
}

pub fn write_demo_set<T: Real, W: Write>(
    w: &mut W,
    env_name: &str,
    sparse_reward: f64,
    demos: &DemoSet<T>,
) -> Result<()> {
    let first = &demos.episodes()[0].transitions()[0];
    let header = FileHeader {
        env_name: env_name.to_string(),
        obs_dim: first.state.len(),
        act_dim: first.action.len(),
        sparse_reward,
        demo_count: demos.len(),
        avg_length: demos.avg_length(),
        seed: demos.source_seed(),
    };
    let all: Vec<Transition<T>> =
        demos.episodes().iter().flat_map(|e| e.transitions().iter().cloned()).collect();
    encode_transitions(w, &header, &all)
}

pub fn read_demo_set<T: Real, R: BufRead>(r: R) -> Result<(FileHeader, DemoSet<T>)> {
    let (header, transitions) = decode_transitions(r)?;
    let episodes = group_episodes(transitions)?;
    let demos = DemoSet::new(episodes, header.seed)?;
    if demos.avg_length() != header.avg_length {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header N = {} but episodes average {}", header.avg_length, demos.avg_length()),
        });
    }
    Ok((header, demos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transitions::testing::episode;

    fn header(count: usize) -> FileHeader {
        FileHeader {
            env_name: "reach2d".into(),
            obs_dim: 2,
            act_dim: 2,
            sparse_reward: 100.0,
            demo_count: count,
            avg_length: 3,
            seed: 9,
        }
    }

    #[test]
    fn empty_list_round_trips() {
        let mut buf = vec![];
        encode_transitions::<f64, _>(&mut buf, &header(0), &[]).unwrap();
        assert_eq!(buf.iter().filter(|&&c| c == b'\n').count(), 1);
        let (h, ts) = decode_transitions::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(h, header(0));
        assert!(ts.is_empty());
    }

    #[test]
    fn truncated_record_names_its_index() {
        let ts = episode(0, 3, true, 100.0).into_transitions();
        let mut buf = vec![];
        encode_transitions(&mut buf, &header(1), &ts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 10];
        match decode_transitions::<f64, _>(cut.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("record 2"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_episodes_are_detected() {
        let ts = episode(0, 3, true, 100.0).into_transitions();
        let mut buf = vec![];
        encode_transitions(&mut buf, &header(2), &ts).unwrap();
        assert!(matches!(decode_transitions::<f64, _>(buf.as_slice()), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_json_reports_line() {
        let text = format!("{}\n{{not json}}\n", serde_json::to_string(&header(1)).unwrap());
        match decode_transitions::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            prop_oneof![
                proptest::num::f64::NORMAL,
                proptest::num::f64::SUBNORMAL,
                proptest::num::f64::ZERO,
                -1.0f64..1.0,
            ]
        }

        fn random_episode(id: u64) -> impl Strategy<Value = Episode<f64>> {
            (1usize..12).prop_flat_map(move |len| {
                proptest::collection::vec(
                    (proptest::collection::vec(finite(), 3), proptest::collection::vec(finite(), 2), finite()),
                    len + 1,
                )
                .prop_map(move |steps| {
                    let ts = (0..len)
                        .map(|k| Transition {
                            state: steps[k].0.clone(),
                            action: steps[k].1.clone(),
                            reward: if k + 1 == len { 100.0 } else { steps[k].2 },
                            next_state: steps[k + 1].0.clone(),
                            done: k + 1 == len,
                            origin: if k % 2 == 0 { Origin::Demo } else { Origin::Relabeled },
                            episode_id: id,
                            step_index: k,
                        })
                        .collect();
                    Episode::new(ts, false).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn demo_sets_round_trip_bit_exactly(
                eps in (1u64..6).prop_flat_map(|n| (0..n).map(random_episode).collect::<Vec<_>>()),
                seed: u64,
            ) {
                let demos = DemoSet::new(eps, seed).unwrap();
                let mut buf = vec![];
                write_demo_set(&mut buf, "reach2d", 100.0, &demos).unwrap();
                let (h, back) = read_demo_set::<f64, _>(buf.as_slice()).unwrap();
                prop_assert_eq!(h.demo_count, demos.len());
                for (a, b) in demos.episodes().iter().zip(back.episodes()) {
                    for (x, y) in a.transitions().iter().zip(b.transitions()) {
                        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
                        prop_assert_eq!(bits(&x.state), bits(&y.state));
                        prop_assert_eq!(bits(&x.action), bits(&y.action));
                        prop_assert_eq!(bits(&x.next_state), bits(&y.next_state));
                        prop_assert_eq!(x.reward.to_bits(), y.reward.to_bits());
                        prop_assert_eq!(x.origin, y.origin);
                    }
                }
                prop_assert_eq!(back, demos);
            }
        }
    }
}
