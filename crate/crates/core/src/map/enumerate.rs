use num_traits::Zero;

use super::count::CountTable;
use super::{Builder, Step, Triangulation};
use crate::error::{Error, Result};

pub const DEFAULT_CAP: usize = 8;

/// Calls `f` on every rooted type-II triangulation of an ℓ-gon with `n`
/// inner vertices, each exactly once up to rooted isomorphism.
pub fn for_each_triangulation<F: FnMut(&Triangulation)>(ell: usize, n: usize, cap: usize, mut f: F) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if ell < 3 {
        return Err(Error::Invalid("boundary length must be at least 3".into()));
    }
    let table = CountTable::new(ell, n);
    let mut pending = vec![(ell, n)];
    let mut steps = Vec::new();
    walk(&table, &mut pending, &mut steps, ell, &mut f);
    Ok(())
}

pub fn enumerate_triangulations(ell: usize, n: usize, cap: usize) -> Result<Vec<Triangulation>> {
    let mut out = Vec::new();
    for_each_triangulation(ell, n, cap, |m| out.push(m.clone()))?;
    Ok(out)
}

fn walk<F: FnMut(&Triangulation)>(
    table: &CountTable,
    pending: &mut Vec<(usize, usize)>,
    steps: &mut Vec<Step>,
    ell0: usize,
    f: &mut F,
) {
    let Some((ell, n)) = pending.pop() else {
        let mut b = Builder::new(ell0);
        for &s in steps.iter() {
            b.apply(s);
        }
        f(&b.finish());
        return;
    };
    if ell == 2 && n == 0 {
        steps.push(Step::Degenerate);
        walk(table, pending, steps, ell0, f);
        steps.pop();
    } else {
        if n >= 1 {
            steps.push(Step::Inner);
            pending.push((ell + 1, n - 1));
            walk(table, pending, steps, ell0, f);
            pending.pop();
            steps.pop();
        }
        for k in 2..ell {
            for n1 in 0..=n {
                if table.get(k, n1).is_zero() || table.get(ell - k + 1, n - n1).is_zero() {
                    continue;
                }
                steps.push(Step::Split { k: k as u32 });
                pending.push((ell - k + 1, n - n1));
                pending.push((k, n1));
                walk(table, pending, steps, ell0, f);
                pending.pop();
                pending.pop();
                steps.pop();
            }
        }
    }
    pending.push((ell, n));
}
