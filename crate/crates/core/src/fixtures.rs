//! Reference models used across tests, benchmarks and the README examples.
//!
//! `two_state_symmetric` is the smallest instance with a singular fixed
//! point at `alpha = 0.5`; `three_state_attracting` has a globally
//! attracting fixed point for the activation ratios we exercise;
//! the `three_state_cycling_*` family falls into a period-2 cycle at
//! `alpha = 0.4`.

use crate::model::BanditModel;

/// Two states, action-independent symmetric dynamics, reward only for
/// activating state 0.
pub fn two_state_symmetric() -> BanditModel {
    let p = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    BanditModel {
        d: 2,
        p0: p.clone(),
        p1: p,
        r0: vec![0.0, 0.0],
        r1: vec![1.0, 0.0],
    }
}

/// Three-state arm whose mean-field map has a globally attracting fixed
/// point; the fixed point is singular at `alpha = 0.4` and interior
/// otherwise. States are already sorted by decreasing index.
pub fn three_state_attracting() -> BanditModel {
    BanditModel {
        d: 3,
        p0: vec![
            vec![0.30368587, 0.25184515, 0.44446898],
            vec![0.40839084, 0.41334941, 0.17825975],
            vec![0.66146205, 0.1840829, 0.15445505],
        ],
        p1: vec![
            vec![0.23763148, 0.42381178, 0.33855674],
            vec![0.54401527, 0.27028947, 0.18569526],
            vec![0.06938943, 0.38776507, 0.54284550],
        ],
        r0: vec![0.0; 3],
        r1: vec![0.99663977, 0.22770951, 0.17300611],
    }
}

/// First period-2 cycle example (`alpha = 0.4`).
pub fn three_state_cycling_a() -> BanditModel {
    BanditModel {
        d: 3,
        p0: vec![
            vec![0.5214073, 0.40392496, 0.07466774],
            vec![0.0158415, 0.21455666, 0.76960184],
            vec![0.53722329, 0.37651148, 0.08626522],
        ],
        p1: vec![
            vec![0.24639364, 0.23402385, 0.51958251],
            vec![0.49681581, 0.49509821, 0.00808597],
            vec![0.37826553, 0.15469252, 0.46704195],
        ],
        r0: vec![0.0; 3],
        r1: vec![0.72232506, 0.18844869, 0.25752477],
    }
}

/// Second period-2 cycle example (`alpha = 0.4`).
pub fn three_state_cycling_b() -> BanditModel {
    BanditModel {
        d: 3,
        p0: vec![
            vec![0.02232142, 0.10229283, 0.87538575],
            vec![0.03426605, 0.17175704, 0.79397691],
            vec![0.52324756, 0.45523298, 0.02151947],
        ],
        p1: vec![
            vec![0.14874601, 0.30435809, 0.54689589],
            vec![0.56845754, 0.41117331, 0.02036915],
            vec![0.25265570, 0.27310439, 0.47423991],
        ],
        r0: vec![0.0; 3],
        r1: vec![0.37401552, 0.11740814, 0.07866135],
    }
}

/// Third period-2 cycle example (`alpha = 0.4`).
pub fn three_state_cycling_c() -> BanditModel {
    BanditModel {
        d: 3,
        p0: vec![
            vec![0.47819592, 0.02090623, 0.50089785],
            vec![0.08063373, 0.15456935, 0.76479692],
            vec![0.66552514, 0.08481946, 0.24965540],
        ],
        p1: vec![
            vec![0.00279465, 0.37327924, 0.62392611],
            vec![0.51582335, 0.46333908, 0.02083756],
            vec![0.41875202, 0.17776712, 0.40348086],
        ],
        r0: vec![0.0; 3],
        r1: vec![0.97658608, 0.53014109, 0.40394919],
    }
}

/// All three cycling examples.
pub fn three_state_cycling_all() -> Vec<BanditModel> {
    vec![
        three_state_cycling_a(),
        three_state_cycling_b(),
        three_state_cycling_c(),
    ]
}
