use eqlam::gen::{random_problem, Rng};
use std::time::Duration;

fn main() {
    let mut rng = Rng::new(0x7e57);
    for i in 0..100 {
        let mut p = random_problem(&mut rng, 5, 8);
        p.config.iter_limit = 16;
        p.config.node_limit = 20_000;
        p.config.time_limit = Duration::from_millis(2000);
        let out = eqlam::prove_problem(&p).unwrap();
        if let eqlam::ReplayStatus::Rejected { step, reason } = &out.replay {
            eprintln!("== problem {i} rejected at step {step}: {reason}");
            for r in &p.rules {
                eprintln!("   rule {}: {} => {} {:?}", r.name, r.lhs, r.rhs, r.directions);
            }
            eprintln!("   goal {} = {}", p.goal.0, p.goal.1);
            eprintln!("   normalized {} = {}", out.goal.0, out.goal.1);
            if let Some(e) = &out.explanation {
                eprintln!("   start {}", e.start);
                for s in &e.steps {
                    eprintln!("   {} {} at {:?} -> {}", if s.forward {"fwd"} else {"bwd"}, s.rule, s.position, s.result);
                }
            }
            break;
        }
    }
}
