// SPDX-License-Identifier: Apache-2.0

use adderopt::analysis::{area, evaluate, sta};
use adderopt::library::CellLibrary;
use adderopt::netlist::GateNetlist;
use adderopt::prefix::{make_classical, Arch};
use adderopt::techmap::{size_gates, Mapper};
use proptest::prelude::*;

fn mapped(arch: usize, n: usize, pick: u64, lib: &CellLibrary) -> GateNetlist {
    let m = Mapper::new(&make_classical(Arch::ALL[arch % 4], n).unwrap());
    m.map(pick as u128 % m.candidate_count(), lib).unwrap()
}

fn adder() -> impl Strategy<Value = (usize, usize, u64)> {
    (0usize..4, 2usize..=16, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn extra_fanout_never_speeds_up((arch, n, pick) in adder(), net in any::<prop::sample::Index>(), size in 0usize..4) {
        let lib = CellLibrary::generic();
        let mut nl = mapped(arch, n, pick, &lib);
        let before = sta(&nl, &lib).unwrap();
        let tap = net.index(nl.nets.len());
        let sink = nl.add_net();
        nl.add_instance("INV", 1 << size, vec![tap], sink, "tap");
        let after = sta(&nl, &lib).unwrap();
        prop_assert!(after.delay >= before.delay - 1e-12);
        for k in 0..before.arrival.len() {
            prop_assert!(after.arrival[k] >= before.arrival[k] - 1e-12);
        }
    }

    #[test]
    fn instance_order_does_not_matter((arch, n, pick) in adder(), perm in any::<u64>()) {
        let lib = CellLibrary::generic();
        let nl = mapped(arch, n, pick, &lib);
        let mut shuffled = nl.clone();
        let k = shuffled.instances.len();
        let mut state = perm | 1;
        for i in (1..k).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.instances.swap(i, (state >> 33) as usize % (i + 1));
        }
        let (x, y) = (sta(&nl, &lib).unwrap(), sta(&shuffled, &lib).unwrap());
        prop_assert_eq!(x.arrival, y.arrival);
        prop_assert_eq!(x.delay, y.delay);
    }

    #[test]
    fn critical_path_has_zero_slack((arch, n, pick) in adder()) {
        let lib = CellLibrary::generic();
        let nl = mapped(arch, n, pick, &lib);
        let r = sta(&nl, &lib).unwrap();
        prop_assert!(!r.critical_path.is_empty());
        for &i in &r.critical_path {
            prop_assert!(r.net_slack(nl.instances[i].output).abs() < 1e-9);
        }
        for net in 0..nl.nets.len() {
            prop_assert!(r.net_slack(net) > -1e-9);
        }
        let last = nl.instances[*r.critical_path.last().unwrap()].output;
        prop_assert!((r.arrival[last] - r.delay).abs() < 1e-12);
    }

    #[test]
    fn sizing_is_monotone_and_idempotent((arch, n, pick) in adder()) {
        let lib = CellLibrary::generic();
        let mut nl = mapped(arch, n, pick, &lib);
        let d0 = sta(&nl, &lib).unwrap().delay;
        size_gates(&mut nl, &lib).unwrap();
        let once = nl.clone();
        prop_assert!(sta(&nl, &lib).unwrap().delay <= d0 + 1e-9);
        prop_assert_eq!(size_gates(&mut nl, &lib).unwrap(), 0);
        prop_assert_eq!(nl, once);
    }

    #[test]
    fn area_is_a_fold_over_instances((arch, n, pick) in adder()) {
        let lib = CellLibrary::generic();
        let nl = mapped(arch, n, pick, &lib);
        let t = |c: &str| match c { "INV" => 2, "NAND2" | "NOR2" => 4, "AOI21" | "OAI21" => 6, "AOI22" | "OAI22" => 8, _ => 12 };
        let want: u64 = nl.instances.iter().map(|i| t(&i.cell) * i.size as u64).sum();
        prop_assert_eq!(area(&nl, &lib).unwrap(), want);
        prop_assert_eq!(evaluate(&nl, &lib).unwrap(), evaluate(&nl, &lib).unwrap());
    }
}

/// `a[0] -> INV -> x`, `x` feeds `k` unit inverters that drive the sum ports.
fn fanout_net(k: usize) -> (GateNetlist, usize) {
    let mut nl = GateNetlist::with_ports("fanout", k);
    let x = nl.add_net();
    let driver = nl.add_instance("INV", 1, vec![nl.ports.a[0]], x, "drv");
    for j in 0..k {
        let s = nl.ports.sum[j];
        nl.add_instance("INV", 1, vec![x], s, "sink");
    }
    let (b0, cout) = (nl.ports.b[0], nl.ports.cout);
    nl.add_instance("INV", 1, vec![b0], cout, "");
    (nl, driver)
}

#[test]
fn fo1_and_fanout_four() {
    let lib = CellLibrary::generic();
    assert!((lib.fo1_check() - 1.0).abs() < 1e-9);
    let (nl, drv) = fanout_net(4);
    let r = sta(&nl, &lib).unwrap();
    assert!((r.stage[drv] - 2.5).abs() < 1e-12);
}

#[test]
fn inverter_chain_stays_unit() {
    let lib = CellLibrary::generic();
    let mut nl = GateNetlist::with_ports("chain", 1);
    let mut prev = nl.ports.a[0];
    for _ in 0..5 {
        let next = nl.add_net();
        nl.add_instance("INV", 1, vec![prev], next, "");
        prev = next;
    }
    let s = nl.ports.sum[0];
    nl.add_instance("INV", 1, vec![prev], s, "");
    let (b0, cout) = (nl.ports.b[0], nl.ports.cout);
    nl.add_instance("INV", 1, vec![b0], cout, "");
    size_gates(&mut nl, &lib).unwrap();
    assert!(nl.instances.iter().all(|i| i.size == 1));
}

#[test]
fn eight_fanout_driver_takes_best_size() {
    let lib = CellLibrary::generic();
    let (mut nl, drv) = fanout_net(8);
    size_gates(&mut nl, &lib).unwrap();
    // Ideal unit input driver into the inverter, then the inverter into 8 unit loads.
    let cost = |s: f64| (1.0 + s) / 2.0 + (1.0 + 8.0 / s) / 2.0;
    let best = [1.0, 2.0, 4.0, 8.0].into_iter().map(cost).fold(f64::INFINITY, f64::min);
    let got = nl.instances[drv].size;
    assert!((cost(got as f64) - best).abs() < 1e-12, "size {got}");
    assert!(nl.instances.iter().filter(|i| i.node == "sink").all(|i| i.size == 1));
    assert_eq!(got, 2, "ties go to the smaller size");
}
