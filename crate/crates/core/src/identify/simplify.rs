//! Sound rewriting of probability expressions.
//!
//! Every rule is an identity that holds wherever the expression is defined:
//!
//! * products and quotients are flattened and identical factors cancel;
//! * `P(H|C) / P(H'|C)` with `H' ⊂ H` becomes `P(H \ H' | H' ∪ C)`;
//! * sums are pushed past factors that do not mention the summed variables;
//! * `Σ_x P(x, H | C)` becomes `P(H | C)` when no other factor mentions `x`;
//! * `Σ_x P(x, H | Z) P(Y | x, H, Z)` becomes `P(Y, H | Z)`;
//! * `norm_t` drops factors free of `t` and turns `P(t, H | C)` into `P(t | H, C)`.
//!
//! A nested sum whose bound name clashes with a free one is lifted after
//! renaming the bound copy to `name~k`; such copies get their original name
//! back wherever that captures nothing.

use std::collections::BTreeSet;

use super::expr::{base_name, Expr, VarOrder, FRESH_SEP};

const MAX_PASSES: usize = 64;
const MAX_ROUNDS: usize = 8;

pub fn simplify(e: Expr, ord: &VarOrder) -> Expr {
    let mut cur = e;
    for _ in 0..MAX_ROUNDS {
        let settled = fixpoint(cur.clone(), ord);
        let restored = restore_names(settled.clone(), ord);
        if restored == settled && settled == cur {
            return restored;
        }
        cur = restored;
    }
    cur
}

fn fixpoint(e: Expr, ord: &VarOrder) -> Expr {
    let mut cur = e;
    for _ in 0..MAX_PASSES {
        let next = pass(cur.clone(), ord);
        if next == cur {
            return next;
        }
        cur = next;
    }
    cur
}

fn pass(e: Expr, ord: &VarOrder) -> Expr {
    match e {
        Expr::Kernel { .. } => e,
        Expr::Product { factors } => {
            make_product(factors.into_iter().map(|f| pass(f, ord)).collect(), ord)
        }
        Expr::Quotient { num, den } => make_quotient(pass(*num, ord), pass(*den, ord), ord),
        Expr::Marginal { sum_out, of } => make_marginal(sum_out, pass(*of, ord), ord),
        Expr::Normalize { target, of } => make_normalize(target, pass(*of, ord), ord),
    }
}

fn into_factors(e: Expr) -> Vec<Expr> {
    match e {
        Expr::Product { factors } => factors,
        other => vec![other],
    }
}

fn from_factors(mut fs: Vec<Expr>) -> Expr {
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Expr::product(fs)
    }
}

fn make_product(factors: Vec<Expr>, ord: &VarOrder) -> Expr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f {
            Expr::Product { factors } => flat.extend(factors),
            other => flat.push(other),
        }
    }
    if flat.iter().any(|f| matches!(f, Expr::Quotient { .. })) {
        let mut nums = Vec::new();
        let mut dens = Vec::new();
        for f in flat {
            match f {
                Expr::Quotient { num, den } => {
                    nums.extend(into_factors(*num));
                    dens.extend(into_factors(*den));
                }
                other => nums.push(other),
            }
        }
        return make_quotient(from_factors(nums), from_factors(dens), ord);
    }
    from_factors(flat)
}

fn make_quotient(num: Expr, den: Expr, ord: &VarOrder) -> Expr {
    if den.is_one() {
        return num;
    }
    if let Expr::Quotient { num: a, den: b } = den {
        return make_quotient(make_product(vec![num, *b], ord), *a, ord);
    }
    if let Expr::Quotient { num: a, den: b } = num {
        return make_quotient(*a, make_product(vec![*b, den], ord), ord);
    }
    let mut nf = into_factors(num);
    let mut df = into_factors(den);

    // identical factors
    let mut i = 0;
    while i < df.len() {
        if let Some(j) = nf.iter().position(|f| same_factor(f, &df[i])) {
            nf.remove(j);
            df.remove(i);
        } else {
            i += 1;
        }
    }

    // P(H|C) / P(H'|C) with H' a proper subset of H
    let mut i = 0;
    while i < df.len() {
        let mut replaced = false;
        if let Some((dh, dc)) = df[i].as_atom() {
            let dh: BTreeSet<&String> = dh.iter().collect();
            let dc: BTreeSet<&String> = dc.iter().collect();
            for f in nf.iter_mut() {
                if let Some((nh, nc)) = f.as_atom() {
                    let nhs: BTreeSet<&String> = nh.iter().collect();
                    let ncs: BTreeSet<&String> = nc.iter().collect();
                    if ncs == dc && dh.is_subset(&nhs) && dh.len() < nhs.len() {
                        let over: Vec<String> =
                            nh.iter().filter(|v| !dh.contains(v)).cloned().collect();
                        let given =
                            ord.sorted(dh.iter().map(|s| (*s).clone()).chain(nc.iter().cloned()));
                        *f = Expr::atom(&over, &given);
                        replaced = true;
                        break;
                    }
                }
            }
        }
        if replaced {
            df.remove(i);
        } else {
            i += 1;
        }
    }

    let num = if nf.is_empty() { Expr::one() } else { from_factors(nf) };
    if df.is_empty() {
        num
    } else {
        Expr::quotient(num, from_factors(df))
    }
}

/// Structural equality that ignores variable order inside atoms.
fn same_factor(a: &Expr, b: &Expr) -> bool {
    match (a.as_atom(), b.as_atom()) {
        (Some((ah, ac)), Some((bh, bc))) => {
            let set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
            set(ah) == set(bh) && set(ac) == set(bc)
        }
        _ => a == b,
    }
}

fn make_marginal(sum_out: Vec<String>, of: Expr, ord: &VarOrder) -> Expr {
    let mut xs: Vec<String> = Vec::new();
    for v in sum_out {
        if !xs.contains(&v) {
            xs.push(v);
        }
    }
    if xs.is_empty() {
        return of;
    }
    match of {
        Expr::Marginal { sum_out: inner, of: body } if inner.iter().all(|v| !xs.contains(v)) => {
            let merged = ord.sorted(xs.into_iter().chain(inner));
            make_marginal(merged, *body, ord)
        }
        Expr::Quotient { num, den } => {
            let dfree = den.free_vars();
            let (xd, xn): (Vec<String>, Vec<String>) =
                xs.into_iter().partition(|v| dfree.contains(v));
            if xn.is_empty() {
                return Expr::marginal(xd, Expr::quotient(*num, *den));
            }
            let inner = make_quotient(make_marginal(xn, *num, ord), *den, ord);
            if xd.is_empty() {
                inner
            } else {
                Expr::marginal(xd, inner)
            }
        }
        other => eliminate(xs, into_factors(other), ord),
    }
}

fn eliminate(mut xs: Vec<String>, mut fs: Vec<Expr>, ord: &VarOrder) -> Expr {
    let mut outside: Vec<Expr> = Vec::new();
    loop {
        // factors free of every summed variable leave the sum
        let (out, inside): (Vec<Expr>, Vec<Expr>) = fs
            .into_iter()
            .partition(|f| xs.iter().all(|x| !f.mentions(x)));
        outside.extend(out);
        fs = inside;
        if xs.is_empty() || fs.is_empty() {
            break;
        }
        if lift_nested(&mut xs, &mut fs, ord)
            || drop_marginalized(&mut xs, &mut fs)
            || merge_chain(&mut xs, &mut fs, ord)
        {
            continue;
        }
        break;
    }
    let mut all = outside;
    if !xs.is_empty() {
        all.push(Expr::marginal(ord.sorted(xs), from_factors(fs)));
    } else {
        all.extend(fs);
    }
    if all.is_empty() {
        Expr::one()
    } else {
        from_factors(all)
    }
}

/// `Σ_X [f Σ_B g]` becomes `Σ_{X,B} [f g]`. A bound name of `B` that clashes
/// with `X` or with a free name of `f` is first renamed to a fresh copy.
fn lift_nested(xs: &mut Vec<String>, fs: &mut Vec<Expr>, ord: &VarOrder) -> bool {
    let Some(i) = fs.iter().position(|f| matches!(f, Expr::Marginal { .. })) else {
        return false;
    };
    let Expr::Marginal { sum_out, of } = fs.remove(i) else {
        unreachable!()
    };
    let mut used: BTreeSet<String> = xs.iter().cloned().collect();
    for f in fs.iter() {
        used.extend(f.all_vars());
    }
    used.extend(of.all_vars());
    let mut body = *of;
    for b in sum_out {
        let clash = xs.contains(&b) || fs.iter().any(|f| f.mentions(&b));
        let name = if clash {
            let fresh = fresh_name(&b, &used);
            body = body.rename_free(&b, &fresh);
            fresh
        } else {
            b
        };
        used.insert(name.clone());
        xs.push(name);
    }
    *xs = ord.sorted(xs.drain(..));
    fs.extend(into_factors(body));
    true
}

fn fresh_name(name: &str, used: &BTreeSet<String>) -> String {
    let base = base_name(name);
    (1..)
        .map(|k| format!("{base}{FRESH_SEP}{k}"))
        .find(|n| !used.contains(n))
        .unwrap()
}

/// Renames fresh bound copies back to their original name where that
/// captures nothing.
fn restore_names(e: Expr, ord: &VarOrder) -> Expr {
    match e {
        Expr::Kernel { .. } => e,
        Expr::Product { factors } => Expr::Product {
            factors: factors.into_iter().map(|f| restore_names(f, ord)).collect(),
        },
        Expr::Quotient { num, den } => {
            Expr::quotient(restore_names(*num, ord), restore_names(*den, ord))
        }
        Expr::Normalize { target, of } => Expr::normalize(target, restore_names(*of, ord)),
        Expr::Marginal { sum_out, of } => {
            let mut body = restore_names(*of, ord);
            let mut names = Vec::with_capacity(sum_out.len());
            for b in &sum_out {
                let base = base_name(b);
                let taken = sum_out.iter().any(|o| o == base) || names.iter().any(|o: &String| o == base);
                if base != b && !taken && body.can_rename(b, base) {
                    body = body.rename_free(b, base);
                    names.push(base.to_string());
                } else {
                    names.push(b.clone());
                }
            }
            Expr::marginal(ord.sorted(names), body)
        }
    }
}

/// `Σ_x P(x, H | C)` with no other factor mentioning `x`.
fn drop_marginalized(xs: &mut Vec<String>, fs: &mut Vec<Expr>) -> bool {
    for xi in 0..xs.len() {
        let x = &xs[xi];
        let users: Vec<usize> = (0..fs.len()).filter(|&i| fs[i].mentions(x)).collect();
        if users.len() != 1 {
            continue;
        }
        let i = users[0];
        let Some((over, given)) = fs[i].as_atom() else {
            continue;
        };
        if !over.contains(x) || given.contains(x) {
            continue;
        }
        let rest: Vec<String> = over.iter().filter(|v| *v != x).cloned().collect();
        if rest.is_empty() {
            fs.remove(i);
        } else {
            fs[i] = Expr::atom(&rest, given);
        }
        xs.remove(xi);
        return true;
    }
    false
}

/// `Σ_x P(x, H | Z) P(Y | x, H, Z)` becomes `P(Y, H | Z)`.
fn merge_chain(xs: &mut Vec<String>, fs: &mut Vec<Expr>, ord: &VarOrder) -> bool {
    for xi in 0..xs.len() {
        let x = &xs[xi];
        let users: Vec<usize> = (0..fs.len()).filter(|&i| fs[i].mentions(x)).collect();
        if users.len() != 2 {
            continue;
        }
        for (a, b) in [(users[0], users[1]), (users[1], users[0])] {
            let (Some((h1, z1)), Some((y, w))) = (fs[a].as_atom(), fs[b].as_atom()) else {
                continue;
            };
            if !h1.contains(x) || z1.contains(x) {
                continue;
            }
            let lhs: BTreeSet<&String> = h1.iter().chain(z1).collect();
            let wset: BTreeSet<&String> = w.iter().collect();
            if lhs != wset || y.iter().any(|v| lhs.contains(v)) {
                continue;
            }
            let over = ord.sorted(
                y.iter()
                    .cloned()
                    .chain(h1.iter().filter(|v| *v != x).cloned()),
            );
            let merged = Expr::atom(&over, z1);
            let (lo, hi) = (a.min(b), a.max(b));
            fs.remove(hi);
            fs[lo] = merged;
            xs.remove(xi);
            return true;
        }
    }
    false
}

fn make_normalize(target: String, of: Expr, ord: &VarOrder) -> Expr {
    match of {
        Expr::Product { factors } => {
            let (keep, drop): (Vec<Expr>, Vec<Expr>) =
                factors.into_iter().partition(|f| f.mentions(&target));
            if keep.is_empty() || drop.is_empty() {
                let mut all = keep;
                all.extend(drop);
                return Expr::normalize(target, Expr::product(all));
            }
            make_normalize(target, from_factors(keep), ord)
        }
        Expr::Quotient { num, den } if !den.mentions(&target) => {
            make_normalize(target, *num, ord)
        }
        Expr::Normalize { target: inner, of } if inner == target => Expr::normalize(target, *of),
        ref atom @ Expr::Kernel { .. } => match atom.as_atom() {
            Some((over, given)) if over.contains(&target) => {
                let context = ord.sorted(
                    over.iter()
                        .filter(|v| **v != target)
                        .cloned()
                        .chain(given.iter().cloned()),
                );
                Expr::atom(&[target], &context)
            }
            _ => Expr::normalize(target, of),
        },
        other => Expr::normalize(target, other),
    }
}
