//! Small generated datasets with known structure, for tests and examples.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::urm::Urm;

/// `blocks` disjoint communities; every user in block `b` interacts with
/// every item in block `b` and nothing else.
pub fn block_urm(blocks: usize, users_per_block: usize, items_per_block: usize) -> Urm {
    let rows = (0..blocks * users_per_block)
        .map(|u| {
            let b = u / users_per_block;
            let start = (b * items_per_block) as u32;
            (start..start + items_per_block as u32).collect()
        })
        .collect();
    Urm::from_rows(blocks * items_per_block, rows).expect("block rows are in range")
}

/// The two-community matrix used throughout the test suite:
/// 200 users by 100 items, two fully dense 100 x 50 blocks.
pub fn two_block_urm() -> Urm {
    block_urm(2, 100, 50)
}

/// Random matrix where every user has at least `min_len` items.
pub fn random_urm(n_users: usize, n_items: usize, density: f64, min_len: usize, seed: u64) -> Urm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n_users)
        .map(|_| {
            let mut row: Vec<u32> = (0..n_items as u32).filter(|_| rng.gen_bool(density)).collect();
            if row.len() < min_len {
                let mut all: Vec<u32> = (0..n_items as u32).collect();
                all.shuffle(&mut rng);
                row = all[..min_len.min(n_items)].to_vec();
            }
            row
        })
        .collect();
    Urm::from_rows(n_items, rows).expect("random rows are in range")
}

/// Block communities where the first `starved_per_block` users of each
/// block only see `starved_len` items of their block, the rest see
/// `dense_len`. Both kinds draw uniformly from the block.
pub fn cold_start_urm(
    blocks: usize,
    users_per_block: usize,
    items_per_block: usize,
    starved_per_block: usize,
    starved_len: usize,
    dense_len: usize,
    seed: u64,
) -> Urm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..blocks * users_per_block)
        .map(|u| {
            let b = u / users_per_block;
            let len = if u % users_per_block < starved_per_block { starved_len } else { dense_len };
            let start = (b * items_per_block) as u32;
            let mut items: Vec<u32> = (start..start + items_per_block as u32).collect();
            items.shuffle(&mut rng);
            items.truncate(len.min(items_per_block));
            items
        })
        .collect();
    Urm::from_rows(blocks * items_per_block, rows).expect("rows are in range")
}
