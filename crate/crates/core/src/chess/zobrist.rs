//! Fixed Zobrist keys; position hashes are stable across runs and platforms.

const fn splitmix(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (state, z ^ (z >> 31))
}

pub(crate) struct Keys {
    pub pieces: [[u64; 64]; 12],
    pub castling: [u64; 16],
    pub en_passant: [u64; 64],
    pub black_to_move: u64,
}

const fn build() -> Keys {
    let mut state = 0x7465_616d_6368_6573; // arbitrary fixed seed
    let mut keys = Keys {
        pieces: [[0; 64]; 12],
        castling: [0; 16],
        en_passant: [0; 64],
        black_to_move: 0,
    };
    let mut p = 0;
    while p < 12 {
        let mut s = 0;
        while s < 64 {
            let (st, v) = splitmix(state);
            state = st;
            keys.pieces[p][s] = v;
            s += 1;
        }
        p += 1;
    }
    let mut c = 0;
    while c < 16 {
        let (st, v) = splitmix(state);
        state = st;
        keys.castling[c] = v;
        c += 1;
    }
    let mut e = 0;
    while e < 64 {
        let (st, v) = splitmix(state);
        state = st;
        keys.en_passant[e] = v;
        e += 1;
    }
    let (_, v) = splitmix(state);
    keys.black_to_move = v;
    keys
}

pub(crate) static KEYS: Keys = build();
