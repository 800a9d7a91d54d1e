//! Plain-text dump of a program for offline inspection.
//!
//! The layout is a sequence of coordinate-format sections:
//!
//! ```text
//! %%ConeProgram n m p
//! %cones N:3 Q:4 ...
//! %c      followed by "j value" lines
//! %G      followed by "i j value" lines (1-based)
//! %h      followed by "i value" lines
//! %A, %b  likewise for equalities
//! ```

use std::io::{self, Write};

use crate::program::{Cone, ConeProgram};

pub fn write_program<W: Write>(p: &ConeProgram, mut out: W) -> io::Result<()> {
    writeln!(out, "%%ConeProgram {} {} {}", p.num_vars(), p.cone_dim(), p.num_eq())?;
    write!(out, "%cones")?;
    for c in p.cones() {
        match c {
            Cone::Nonneg(d) => write!(out, " N:{d}")?,
            Cone::SecondOrder(d) => write!(out, " Q:{d}")?,
        }
    }
    writeln!(out)?;
    writeln!(out, "%c")?;
    for (j, c) in p.objective().iter().enumerate() {
        if *c != 0.0 {
            writeln!(out, "{} {:e}", j + 1, c)?;
        }
    }
    writeln!(out, "%G")?;
    for (i, (row, _)) in p.g_rows().enumerate() {
        for (j, c) in row {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, c)?;
        }
    }
    writeln!(out, "%h")?;
    for (i, (_, h)) in p.g_rows().enumerate() {
        writeln!(out, "{} {:e}", i + 1, h)?;
    }
    writeln!(out, "%A")?;
    for (i, (row, _)) in p.eq_rows().enumerate() {
        for (j, c) in row {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, c)?;
        }
    }
    writeln!(out, "%b")?;
    for (i, (_, b)) in p.eq_rows().enumerate() {
        writeln!(out, "{} {:e}", i + 1, b)?;
    }
    writeln!(out, "%names")?;
    for j in 0..p.num_vars() {
        writeln!(out, "{} {}", j + 1, p.var_name(crate::Var(j)))?;
    }
    Ok(())
}

pub fn dump_to_file(p: &ConeProgram, path: impl AsRef<std::path::Path>) -> io::Result<()> {
    let f = std::fs::File::create(path)?;
    write_program(p, io::BufWriter::new(f))
}
