use proptest::prelude::*;

use lowregret::contextual::{best_response, ActionGenerator};
use lowregret::cutting_plane::{propose_john_center, update_knowledge, CuttingPlaneState};
use lowregret::geometry::Point;
use lowregret::oracles::{respond_strong_max_regret, respond_weak};
use lowregret::RngStream;

fn in_ball(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.95 {
        v.iter().map(|x| x * 0.95 / n).collect()
    } else {
        v
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hidden_vector_stays_in_knowledge(w in prop::collection::vec(-1.0f64..1.0, 3), weak in any::<bool>(), axis in 0usize..3) {
        let w = Point::new(in_ball(w)).unwrap();
        let mut state = CuttingPlaneState::initial(3, Some(12)).unwrap();
        for _ in 0..12 {
            if state.knowledge().is_frozen() {
                break;
            }
            let p = propose_john_center(&state, 0.05).unwrap();
            let resp = if weak {
                respond_weak(&lowregret::geometry::Direction::axis(3, (axis + state.round()) % 3), &w, &p)
            } else {
                respond_strong_max_regret(&w, &p)
            };
            prop_assert!((w.vector() - p.vector()).dot(resp.direction.vector()) >= -1e-12);
            state = update_knowledge(&state, &p, &resp.direction).unwrap();
            prop_assert!(state.knowledge().contains(w.vector(), 1e-7));
        }
    }

    #[test]
    fn best_response_regions_are_convex(seed in 0u64..1000, a in prop::collection::vec(-1.0f64..1.0, 2), b in prop::collection::vec(-1.0f64..1.0, 2), t in 0.0f64..1.0) {
        let x = ActionGenerator::UniformSphere { count: 12 }.generate(2, 1, RngStream::new(seed, 0)).unwrap();
        let wa = Point::new(a.clone()).unwrap();
        let wb = Point::new(b.clone()).unwrap();
        let i = best_response(&wa, &x);
        prop_assume!(best_response(&wb, &x) == i);
        let mid = Point::new(vec![(1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1]]).unwrap();
        let j = best_response(&mid, &x);
        prop_assert!(x.value(i, &mid) >= x.value(j, &mid) - 1e-12);
    }
}
