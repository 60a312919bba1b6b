use delaysync::delayline::{DelayLine, PrefillPolicy};
use proptest::prelude::*;

fn signal(len: usize, width: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, width), len)
}

fn run(line: &mut DelayLine, input: &[Vec<f64>]) -> Vec<Vec<f64>> {
    input.iter().map(|x| line.push_and_read(x).unwrap()).collect()
}

proptest! {
    #[test]
    fn output_is_shifted_input(d in 0usize..12, input in signal(40, 2)) {
        let out = run(&mut DelayLine::new(d, 2, PrefillPolicy::Zeros), &input);
        for k in 0..input.len() {
            let want = if k >= d { input[k - d].clone() } else { vec![0.0; 2] };
            prop_assert_eq!(&out[k], &want);
        }
        let held = run(&mut DelayLine::new(d, 2, PrefillPolicy::HoldInitial), &input);
        for k in 0..input.len() {
            prop_assert_eq!(&held[k], &input[k.saturating_sub(d)]);
        }
    }

    #[test]
    fn delays_compose(d1 in 0usize..8, d2 in 0usize..8, input in signal(40, 3)) {
        let mut first = DelayLine::new(d1, 3, PrefillPolicy::Zeros);
        let mut second = DelayLine::new(d2, 3, PrefillPolicy::Zeros);
        let chained: Vec<Vec<f64>> = input
            .iter()
            .map(|x| second.push_and_read(&first.push_and_read(x).unwrap()).unwrap())
            .collect();
        let direct = run(&mut DelayLine::new(d1 + d2, 3, PrefillPolicy::Zeros), &input);
        prop_assert_eq!(chained, direct);
    }

    #[test]
    fn zero_filled_line_is_linear(d in 0usize..8, x in signal(30, 2), y in signal(30, 2),
                                  a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mix: Vec<Vec<f64>> = x.iter().zip(&y)
            .map(|(u, v)| u.iter().zip(v).map(|(p, q)| a * p + b * q).collect())
            .collect();
        let ox = run(&mut DelayLine::new(d, 2, PrefillPolicy::Zeros), &x);
        let oy = run(&mut DelayLine::new(d, 2, PrefillPolicy::Zeros), &y);
        let om = run(&mut DelayLine::new(d, 2, PrefillPolicy::Zeros), &mix);
        for k in 0..30 {
            for c in 0..2 {
                prop_assert!((om[k][c] - (a * ox[k][c] + b * oy[k][c])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_width_rejected(d in 0usize..5) {
        let mut line = DelayLine::new(d, 2, PrefillPolicy::Zeros);
        prop_assert!(line.push_and_read(&[1.0, 2.0, 3.0]).is_err());
    }
}
