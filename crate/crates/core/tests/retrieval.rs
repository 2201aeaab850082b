use chrono::TimeZone;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taletailor::generation::HashingEmbedder;
use taletailor::retrieval::{consistency, rank_stories_by_consistency, ClassDistribution, EmbeddingIndex, IndexError};
use taletailor::story::{Block, StoryDocument};

fn ttix(dim: u32, entries: &[(&str, &[f32])]) -> Vec<u8> {
    let mut b = b"TTIX".to_vec();
    b.extend(1u32.to_le_bytes());
    b.extend(dim.to_le_bytes());
    b.extend((entries.len() as u64).to_le_bytes());
    for (id, v) in entries {
        b.extend((id.len() as u16).to_le_bytes());
        b.extend(id.as_bytes());
        for x in *v {
            b.extend(x.to_le_bytes());
        }
    }
    b
}

#[test]
fn reads_hand_encoded_file() {
    let bytes = ttix(
        4,
        &[
            ("a", &[1.0, 0.0, 0.0, 0.0]),
            ("b", &[0.0, 1.0, 0.0, 0.0]),
            ("c", &[0.0, 0.0, 0.6, 0.8]),
        ],
    );
    let idx = EmbeddingIndex::read_from(&bytes[..]).unwrap();
    assert_eq!(idx.len(), 3);
    assert_eq!(idx.vector("c").unwrap(), &[0.0, 0.0, 0.6, 0.8]);

    let nan = ttix(2, &[("a", &[f32::NAN, 1.0])]);
    assert!(matches!(
        EmbeddingIndex::read_from(&nan[..]),
        Err(IndexError::NonFinite { .. })
    ));
    let mut short = bytes.clone();
    short.truncate(bytes.len() - 3);
    assert!(matches!(
        EmbeddingIndex::read_from(&short[..]),
        Err(IndexError::Truncated { entry: 2 })
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(EmbeddingIndex::read_from(&bad[..]), Err(IndexError::BadMagic)));
}

#[test]
fn hand_checked_queries() {
    let idx = EmbeddingIndex::from_entries(2, [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap();
    let r = idx.retrieve(&[1.0, 0.0], 1).unwrap();
    assert_eq!((r.hits[0].image_id.as_str(), r.hits[0].score), ("a", 1.0));
    let r = idx.retrieve(&[0.6, 0.8], 2).unwrap();
    assert_eq!(r.hits[0].image_id, "b");
    assert!((r.hits[0].score - 0.8).abs() < 1e-6 && (r.hits[1].score - 0.6).abs() < 1e-6);
}

#[test]
fn random_index_equals_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let dim = 16;
    let entries: Vec<(String, Vec<f32>)> = (0..200)
        .map(|i| {
            (
                format!("v{i}"),
                (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
            )
        })
        .collect();
    let idx = EmbeddingIndex::from_entries(dim, entries.clone()).unwrap();
    let q: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let qn = q.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let mut oracle: Vec<(f64, String)> = entries
        .iter()
        .map(|(id, v)| {
            let n = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(&q).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
            (dot / (n * qn), id.clone())
        })
        .collect();
    oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let got = idx.retrieve(&q, 200).unwrap();
    for (h, (s, id)) in got.hits.iter().zip(&oracle) {
        assert_eq!(&h.image_id, id);
        assert!((h.score - s).abs() < 1e-5);
    }
}

#[test]
fn file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let idx = EmbeddingIndex::from_entries(
        8,
        (0..50).map(|i| {
            (
                format!("img-{i}"),
                (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>(),
            )
        }),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ttix");
    idx.save(&path).unwrap();
    let back = EmbeddingIndex::load(&path).unwrap();
    for id in idx.ids() {
        let a: Vec<u32> = idx.vector(id).unwrap().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u32> = back.vector(id).unwrap().iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
    }
}

fn fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x100000001b3)
    })
}

#[test]
fn hashing_projector_known_vector() {
    // Content words of the text: "red", "fox", "red".
    let dim = 8;
    let mut expected = vec![0.0f64; dim];
    for w in ["red", "fox", "red"] {
        let h = fnv(w.as_bytes());
        expected[(h % dim as u64) as usize] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    }
    let n = expected.iter().map(|x| x * x).sum::<f64>().sqrt();
    let expected: Vec<f32> = expected.iter().map(|x| (x / n) as f32).collect();
    assert_eq!(
        HashingEmbedder::new(dim).embed_one("The red fox, the red!").unwrap(),
        expected
    );
}

fn cd(id: &str, p: &[f64]) -> ClassDistribution {
    ClassDistribution::new(id, p.to_vec()).unwrap()
}

#[test]
fn consistency_examples() {
    assert_eq!(consistency(&[cd("a", &[0.3, 0.7]), cd("b", &[0.3, 0.7])]).unwrap(), 0.0);
    let s = consistency(&[cd("a", &[0.9, 0.1]), cd("b", &[0.1, 0.9])]).unwrap();
    assert!((s - 1.6 * 9f64.ln()).abs() < 1e-12);
    assert!((s - 3.516).abs() < 1e-3);
}

#[test]
fn duplicates_never_decrease_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(1..6);
        let mut d: Vec<ClassDistribution> = (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = w.iter().sum();
                cd(&format!("i{i}"), &w.iter().map(|x| x / s).collect::<Vec<_>>())
            })
            .collect();
        let before = consistency(&d).unwrap();
        let dup = d[rng.random_range(0..n)].clone();
        d.push(dup);
        assert!(consistency(&d).unwrap() >= before - 1e-12);
    }
}

fn story(id: &str, images: &[&str]) -> StoryDocument {
    let mut s = StoryDocument::new(id, id, chrono::Utc.timestamp_opt(0, 0).unwrap());
    for img in images {
        s.blocks.push(Block::Image {
            image_id: (*img).into(),
            query: String::new(),
            theme: String::new(),
            attribution: None,
        });
    }
    s
}

#[test]
fn stories_rank_by_ascending_score() {
    let far = vec![cd("x", &[0.9, 0.1]), cd("y", &[0.1, 0.9])];
    let same = vec![cd("p", &[0.5, 0.5]), cd("q", &[0.5, 0.5])];
    let ranked = rank_stories_by_consistency(&[
        (story("none", &[]), vec![]),
        (story("far", &["x", "y"]), far),
        (story("same", &["p", "q"]), same),
    ]);
    let order: Vec<&str> = ranked.iter().map(|r| r.story_id.as_str()).collect();
    assert_eq!(order, vec!["same", "far", "none"]);
    assert_eq!(ranked[0].consistency, Some(0.0));
    assert_eq!(
        rank_stories_by_consistency(&[(story("one", &[]), vec![])])[0].story_id,
        "one"
    );
}

proptest! {
    #[test]
    fn every_vector_finds_itself(seed in 0u64..1000, n in 1usize..64, dim in 2usize..32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<(String, Vec<f32>)> = (0..n)
            .map(|i| (format!("{i:03}"), (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()))
            .collect();
        let idx = EmbeddingIndex::from_entries(dim, entries).unwrap();
        for id in idx.ids() {
            let hit = &idx.retrieve(idx.vector(id).unwrap(), 1).unwrap().hits[0];
            prop_assert!((hit.score - 1.0).abs() <= 1e-6);
            // A parallel duplicate could tie; the match must at least score 1.
            if hit.image_id != *id {
                let other = idx.vector(&hit.image_id).unwrap();
                let dot: f32 = other.iter().zip(idx.vector(id).unwrap()).map(|(a, b)| a * b).sum();
                prop_assert!((dot - 1.0).abs() < 1e-6);
            }
        }
    }
}
