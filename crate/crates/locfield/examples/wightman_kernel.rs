//! The vacuum two-point function of the free field along a line of event
//! pairs: real and imaginary parts across the light cone, and the
//! commutator, which must vanish at spacelike separation (microcausality).

use locfield::kernel::{commutator, wightman_vacuum, Event, FieldSpec};

fn main() -> locfield::Result<()> {
    let spec = FieldSpec::new(0.0, 1e-4)?;
    let origin = Event::new(0.0, [0.0; 3]);
    let r = 1.0;

    println!("{:>8}  {:>13}  {:>13}  {:>12}", "dt", "Re W", "Im W", "|commutator|");
    for i in 0..=20 {
        let dt = 0.2 * i as f64;
        let b = Event::new(dt, [r, 0.0, 0.0]);
        let w = wightman_vacuum(spec, origin, b)?;
        let c = commutator(spec, origin, b)?;
        let tag = if dt < r { "  spacelike" } else { "" };
        println!("{dt:8.2}  {:13.6e}  {:13.6e}  {:12.4e}{tag}", w.re, w.im, c.norm());
    }
    Ok(())
}
