mod common;

use common::{relabel_oracle, sparse_episode};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relabel::envs::{generate_demos, Env};
use relabel::transitions::codec::{read_demo_set, write_demo_set};
use relabel::transitions::{ingest_demonstration, relabel_successful_episode, relabel_window, Origin};

proptest! {
    #[test]
    fn relabeling_matches_the_reference(
        seed in any::<u64>(),
        len in 1usize..150,
        success in any::<bool>(),
        n in 1usize..80,
        b in 0.0f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ep = sparse_episode(&mut rng, 7, len, success, 100.0);
        let rewards: Vec<f64> = ep.transitions().iter().map(|t| t.reward).collect();
        let out = relabel_successful_episode(&ep, b, n);
        let got: Vec<f64> = out.transitions().iter().map(|t| t.reward).collect();
        prop_assert_eq!(got, relabel_oracle(&rewards, success, b, n));
        prop_assert_eq!(&relabel_successful_episode(&out, b, n), &out);
        let relabeled = out.transitions().iter().filter(|t| t.origin == Origin::Relabeled).count();
        prop_assert_eq!(relabeled, if success { relabel_window(len, n) } else { 0 });
        for (a, o) in ep.transitions().iter().zip(out.transitions()) {
            prop_assert_eq!(&a.state, &o.state);
            prop_assert_eq!(&a.action, &o.action);
            prop_assert_eq!(a.done, o.done);
        }
    }
}

#[test]
fn the_final_transition_keeps_the_sparse_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ep = sparse_episode(&mut rng, 0, 20, true, 100.0);
    let out = relabel_successful_episode(&ep, 5.0, 1000);
    let last = out.transitions().last().unwrap();
    assert_eq!((last.reward, last.origin), (100.0, Origin::Agent));
    assert!(out.transitions()[..19].iter().all(|t| t.reward == 5.0));
}

#[test]
fn window_of_one_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ep = sparse_episode(&mut rng, 0, 12, true, 100.0);
    assert_eq!(relabel_successful_episode(&ep, 5.0, 1), ep);
}

#[test]
fn demonstrations_get_bonus_then_sparse_reward() {
    let mut env = Env::new("reach2d").unwrap();
    let demos = generate_demos::<f64>(&mut env, 5, 3).unwrap();
    for ep in demos.episodes() {
        let ts = ingest_demonstration(ep, 100.0, 2.5).unwrap();
        let (last, rest) = ts.split_last().unwrap();
        assert_eq!(last.reward, 100.0);
        assert!(rest.iter().all(|t| t.reward == 2.5 && t.origin == Origin::Demo));
    }
}

#[test]
fn ingesting_a_failure_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ep = sparse_episode(&mut rng, 0, 10, false, 100.0);
    assert!(ingest_demonstration(&ep, 100.0, 1.0).is_err());
}

#[test]
fn demo_files_round_trip_bit_for_bit() {
    let mut env = Env::new("switch2d").unwrap();
    let demos = generate_demos::<f64>(&mut env, 12, 8).unwrap();
    let mut bytes = Vec::new();
    write_demo_set(&mut bytes, "switch2d", 100.0, &demos).unwrap();
    let (header, back) = read_demo_set::<f64, _>(bytes.as_slice()).unwrap();
    assert_eq!(header.env_name, "switch2d");
    assert_eq!(header.demo_count, 12);
    assert_eq!(header.avg_length, demos.avg_length());
    assert_eq!((header.obs_dim, header.act_dim), (8, 2));
    assert_eq!(back, demos);
}

#[test]
fn decoding_rejects_garbage() {
    let mut env = Env::new("reach2d").unwrap();
    let demos = generate_demos::<f64>(&mut env, 2, 0).unwrap();
    let mut bytes = Vec::new();
    write_demo_set(&mut bytes, "reach2d", 100.0, &demos).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect::<String>() + "{\"episode_id\": 1";
    assert!(read_demo_set::<f64, _>(truncated.as_bytes()).is_err());
    assert!(read_demo_set::<f64, _>("not json\n".as_bytes()).is_err());
}
