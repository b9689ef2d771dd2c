//! Cross-module properties: every solver output goes back through the verifiers.

use num_traits::ToPrimitive;
use proptest::prelude::*;

use pcf_core::coloring::{bichromatic_paths_ok, is_fractional_pcf, is_pcf, SetColoring};
use pcf_core::fractional::{fractional_pcf_lp, round_to_ab};
use pcf_core::graph::{generate, star_linear_hypergraph};
use pcf_core::io::{parse_coloring, parse_graph, write_coloring, write_graph};
use pcf_core::rational::{int, ratio};
use pcf_core::solvers::{exact_chi_pcf, greedy_pcf, reduce_low_degree, sample_pcf, SolverConfig};
use pcf_core::stirling::star_linear_palette;
use pcf_core::{ConflictInstance, GraphKind, ListAssignment};

fn gnp(n: usize, p: f64, seed: u64) -> pcf_core::Graph {
    generate(GraphKind::Gnp { n, p }, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_is_between_lp_and_greedy(n in 1usize..8, p in 0.1f64..0.9, seed: u64) {
        let inst = ConflictInstance::with_neighborhoods(gnp(n, p, seed));
        let greedy = greedy_pcf(&inst);
        prop_assert!(is_pcf(&inst, &greedy, None, 1).unwrap());
        let chi = exact_chi_pcf(&inst, &SolverConfig::default()).unwrap();
        let k = chi.exact().unwrap();
        prop_assert!(is_pcf(&inst, &chi.witness, None, 1).unwrap());
        prop_assert_eq!(chi.witness.distinct_colors(), k);
        prop_assert!(k <= greedy.distinct_colors());
        let lp = fractional_pcf_lp(&inst).unwrap();
        prop_assert!(lp.optimum <= int(k as i64));
        // An integral coloring is a (k:1)-coloring.
        let psi = SetColoring::new(k as u32, 1, chi.witness.colors.iter().map(|&c| vec![c]).collect()).unwrap();
        prop_assert!(is_fractional_pcf(&inst, &psi).unwrap());
    }

    #[test]
    fn reduction_extends_kernel_colorings(n in 2usize..25, p in 0.05f64..0.3, seed: u64) {
        let g = gnp(n, p, seed);
        let red = reduce_low_degree(&g);
        let lists = ListAssignment::uniform(n, (g.max_degree() * g.max_degree() + 3) as u32).unwrap();
        let kernel = red.kernel_instance();
        let klists = red.kernel_lists(&lists).unwrap();
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let kphi = sample_pcf(&kernel, &klists, &cfg).unwrap().coloring;
        prop_assume!(kphi.is_some());
        let phi = red.extend(&kphi.unwrap(), &lists).unwrap();
        let inst = ConflictInstance::with_neighborhoods(g);
        prop_assert!(is_pcf(&inst, &phi, Some(&lists), 1).unwrap());
    }

    #[test]
    fn star_linear_samples_have_short_bichromatic_components(n in 4usize..16, seed: u64) {
        let g = gnp(n, 0.25, seed);
        let delta = g.max_degree();
        prop_assume!(delta >= 1);
        let k = star_linear_palette(delta as u64).unwrap().ceil().to_u32().unwrap();
        let inst = ConflictInstance::new(g.clone(), star_linear_hypergraph(&g)).unwrap();
        let lists = ListAssignment::uniform(n, k).unwrap();
        let out = sample_pcf(&inst, &lists, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        if let Some(phi) = out.coloring {
            prop_assert!(is_pcf(&inst, &phi, Some(&lists), 1).unwrap());
            prop_assert!(bichromatic_paths_ok(&g, &phi, 3).unwrap());
        }
    }

    #[test]
    fn files_round_trip_through_solvers(n in 1usize..30, p in 0.0f64..0.4, seed: u64) {
        let g = gnp(n, p, seed);
        let g2 = parse_graph(&write_graph(&g)).unwrap();
        prop_assert_eq!(&g, &g2);
        let phi = greedy_pcf(&ConflictInstance::with_neighborhoods(g2));
        prop_assert_eq!(parse_coloring(&write_coloring(&phi), n).unwrap(), phi);
    }
}

#[test]
fn odd_cycles_round_to_their_fractional_value() {
    for n in [5usize, 7, 9] {
        let inst = ConflictInstance::proper_only(generate(GraphKind::Cycle { n }, 0).unwrap());
        let lp = fractional_pcf_lp(&inst).unwrap();
        let k = (n as i64 - 1) / 2;
        assert_eq!(lp.optimum, int(2) + ratio(1, k));
        let r = round_to_ab(&inst, &lp).unwrap();
        assert!(r.verified);
        assert_eq!(ratio(r.coloring.a as i64, r.coloring.b as i64), lp.optimum);
    }
}
