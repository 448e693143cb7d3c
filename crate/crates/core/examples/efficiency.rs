//! Resolution-improvement efficiency of the sampling matrix from a table of
//! LSB and LUT usage per matrix order.

use gco_tdc::experiment::compute_efficiency;

fn main() -> gco_tdc::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/table1.csv").to_string());
    for record in compute_efficiency(path.as_ref())? {
        println!("{}", record.device_label);
        for row in &record.rows {
            match (row.e_m, &row.error) {
                (Some(e), _) => println!("  M {:2}  LSB {:6.2} ps  LUT {:6}  E {e:.2}", row.m, row.lsb_ps, row.lut_count),
                (None, Some(err)) => println!("  M {:2}  {err}", row.m),
                _ => println!("  M {:2}  LSB {:6.2} ps  LUT {:6}", row.m, row.lsb_ps, row.lut_count),
            }
        }
    }
    Ok(())
}
