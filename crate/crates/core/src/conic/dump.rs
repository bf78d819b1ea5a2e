use std::io::{self, Write};

use super::{ConeBound, ConicProgram};

/// Writes `prog` as plain text for offline inspection.
///
/// ```text
/// vars <n>
/// c <c_0> … <c_{n−1}>
/// cone <k> rows <r> cols <j_0> … <j_{q−1}>
/// bound const <h>            | bound affine <h> <g_0> … <g_{q−1}>
/// a <row of A>               (r lines)
/// b <b_0> … <b_{r−1}>
/// eq <value> <e_0> … <e_{n−1}>
/// ```
///
/// Numbers use Rust's shortest round-trip formatting.
pub fn write_program<W: Write>(prog: &ConicProgram, mut out: W) -> io::Result<()> {
    writeln!(out, "vars {}", prog.num_vars())?;
    write!(out, "c")?;
    write_row(&mut out, prog.objective())?;
    for (k, soc) in prog.soc_constraints().iter().enumerate() {
        write!(out, "cone {k} rows {} cols", soc.num_rows())?;
        for c in soc.cols() {
            write!(out, " {c}")?;
        }
        writeln!(out)?;
        match soc.bound() {
            ConeBound::Constant(h) => writeln!(out, "bound const {h:?}")?,
            ConeBound::Affine { g, h } => {
                write!(out, "bound affine {h:?}")?;
                write_row(&mut out, g)?;
            }
        }
        let a = soc.a();
        for i in 0..a.nrows() {
            write!(out, "a")?;
            let row: Vec<f64> = (0..a.ncols()).map(|j| a[(i, j)]).collect();
            write_row(&mut out, &row)?;
        }
        write!(out, "b")?;
        write_row(&mut out, soc.b())?;
    }
    for eq in prog.equalities() {
        write!(out, "eq {:?}", eq.value)?;
        write_row(&mut out, &eq.row)?;
    }
    Ok(())
}

fn write_row<W: Write>(out: &mut W, row: &[f64]) -> io::Result<()> {
    for v in row {
        write!(out, " {v:?}")?;
    }
    writeln!(out)
}
