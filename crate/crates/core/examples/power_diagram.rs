//! Builds a weighted power diagram on the unit square, prints every cell
//! with its neighbours, and writes an SVG.
//!
//! cargo run --example power_diagram [-- OUT_DIR]

use std::error::Error;

use powerlloyd::app::diagram_scene;
use powerlloyd::geometry::{build_power_diagram, locate, Domain, GeneratorSet, Point2};

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/power_diagram".into());
    let domain = Domain::unit_square();
    let gens = GeneratorSet::new(
        vec![
            Point2::new(0.2, 0.2),
            Point2::new(0.8, 0.25),
            Point2::new(0.5, 0.55),
            Point2::new(0.15, 0.8),
            Point2::new(0.8, 0.85),
        ],
        // a larger weight claims more of the domain
        vec![0.0, 0.02, 0.05, -0.01, 0.0],
    )?;
    let d = build_power_diagram(&domain, &gens)?;

    for (i, cell) in d.cells.iter().enumerate() {
        println!(
            "cell {i}: {} sides, area {:.4}, neighbours {:?}",
            cell.side_count(),
            cell.polygon.area(),
            d.adjacency.neighbors[i]
        );
    }
    for e in &d.adjacency.edges {
        println!("edge {}–{}: length {:.4}", e.i, e.j, e.length());
    }
    println!("partition residual {:.1e}", d.partition_residual());

    let p = Point2::new(0.45, 0.4);
    println!("{p:?} lies in cell {}", locate(&gens, p));

    // shifting every weight by a constant leaves the diagram unchanged
    let shifted = build_power_diagram(&domain, &gens.shifted_weights(1.0))?;
    assert_eq!(shifted.side_counts(), d.side_counts());

    std::fs::create_dir_all(&out)?;
    let svg = diagram_scene(&domain, &d, &gens, true).render();
    std::fs::write(format!("{out}/diagram.svg"), svg)?;
    println!("wrote {out}/diagram.svg");
    Ok(())
}
