//! Truncated multivariate power series over grouped variable slots.
//!
//! A [`Jet`] stores a sparse map from concatenated exponent vectors to
//! coefficients. Variables are organized in named groups ([`VarLayout`]);
//! holomorphic groups are paired with the antiholomorphic group that follows
//! them, which is what [`Jet::conj`] and [`Jet::is_hermitian`] rely on.
//!
//! Truncation is by total degree across all groups (`cap`). Every stored key
//! has total degree `<= cap`, and in exact mode no stored coefficient is zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::scalar::Coeff;

/// Concatenated exponents over every variable of a layout.
pub type Exponents = SmallVec<[u16; 8]>;

/// A multi-index over the variables of a single group.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(pub SmallVec<[u16; 4]>);

impl MultiIndex {
    pub fn new(entries: &[u16]) -> Self {
        MultiIndex(SmallVec::from_slice(entries))
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(smallvec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|α|`
    pub fn order(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// `α! = α_1! ⋯ α_n!`
    pub fn factorial(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |acc, &e| acc * factorial(e as u32))
    }

    pub fn entries(&self) -> &[u16] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Holomorphic variables; must be followed by their antiholomorphic partner.
    Holo,
    /// Antiholomorphic variables; must directly follow a holomorphic group of equal size.
    Anti,
    /// Independent real (or complex, unpaired) variables.
    Real,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarGroup {
    pub name: String,
    pub n: usize,
    pub kind: GroupKind,
}

/// Ordered variable groups of a jet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarLayout {
    groups: Vec<VarGroup>,
    offsets: Vec<usize>,
    nvars: usize,
}

impl VarLayout {
    pub fn new(groups: Vec<VarGroup>) -> Result<Self> {
        for (i, g) in groups.iter().enumerate() {
            match g.kind {
                GroupKind::Holo => {
                    let partner = groups.get(i + 1);
                    if !matches!(partner, Some(p) if p.kind == GroupKind::Anti && p.n == g.n) {
                        return Err(Error::LayoutMismatch(format!(
                            "holomorphic group {} is not followed by an antiholomorphic group of size {}",
                            g.name, g.n
                        )));
                    }
                }
                GroupKind::Anti => {
                    let ok = i > 0 && groups[i - 1].kind == GroupKind::Holo && groups[i - 1].n == g.n;
                    if !ok {
                        return Err(Error::LayoutMismatch(format!(
                            "antiholomorphic group {} has no holomorphic partner",
                            g.name
                        )));
                    }
                }
                GroupKind::Real => {}
            }
        }
        let mut offsets = Vec::with_capacity(groups.len());
        let mut nvars = 0;
        for g in &groups {
            offsets.push(nvars);
            nvars += g.n;
        }
        Ok(VarLayout { groups, offsets, nvars })
    }

    /// Conjugate pairs `[(name, n, holo), (namē, n, anti), ...]`.
    pub fn pairs(names: &[&str], n: usize) -> Self {
        let mut groups = Vec::new();
        for name in names {
            groups.push(VarGroup { name: (*name).to_string(), n, kind: GroupKind::Holo });
            groups.push(VarGroup { name: format!("{name}bar"), n, kind: GroupKind::Anti });
        }
        VarLayout::new(groups).expect("pairs layout is well formed")
    }

    /// Unpaired groups `[(name, n, real), ...]`.
    pub fn real(names: &[&str], n: usize) -> Self {
        let groups = names
            .iter()
            .map(|name| VarGroup { name: (*name).to_string(), n, kind: GroupKind::Real })
            .collect();
        VarLayout::new(groups).expect("real layout is well formed")
    }

    pub fn groups(&self) -> &[VarGroup] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn group(&self, g: usize) -> &VarGroup {
        &self.groups[g]
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn range(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g] + self.groups[g].n
    }

    /// Flat index of variable `i` in group `g`.
    pub fn slot(&self, g: usize, i: usize) -> usize {
        assert!(i < self.groups[g].n, "variable index out of range");
        self.offsets[g] + i
    }

    /// Index of the conjugate partner group, if any.
    pub fn partner(&self, g: usize) -> Option<usize> {
        match self.groups[g].kind {
            GroupKind::Holo => Some(g + 1),
            GroupKind::Anti => Some(g - 1),
            GroupKind::Real => None,
        }
    }

    /// Sum of exponents of group `g` in `key`.
    pub fn group_degree(&self, key: &[u16], g: usize) -> u32 {
        key[self.range(g)].iter().map(|&e| e as u32).sum()
    }

    pub fn split(&self, key: &[u16]) -> Vec<MultiIndex> {
        (0..self.groups.len()).map(|g| MultiIndex::new(&key[self.range(g)])).collect()
    }

    pub fn join(&self, parts: &[MultiIndex]) -> Result<Exponents> {
        if parts.len() != self.groups.len() {
            return Err(Error::LayoutMismatch(format!(
                "expected {} multi-indices, got {}",
                self.groups.len(),
                parts.len()
            )));
        }
        let mut key = Exponents::with_capacity(self.nvars);
        for (g, p) in parts.iter().enumerate() {
            if p.len() != self.groups[g].n {
                return Err(Error::LayoutMismatch(format!(
                    "multi-index {} has length {}, group {} has {} variables",
                    p,
                    p.len(),
                    self.groups[g].name,
                    self.groups[g].n
                )));
            }
            key.extend_from_slice(p.entries());
        }
        Ok(key)
    }
}

pub fn total_degree(key: &[u16]) -> u32 {
    key.iter().map(|&e| e as u32).sum()
}

/// Truncated power series with sparse coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<C> {
    layout: VarLayout,
    cap: u32,
    terms: BTreeMap<Exponents, C>,
}

impl<C: Coeff> Jet<C> {
    pub fn zero(layout: &VarLayout, cap: u32) -> Self {
        Jet { layout: layout.clone(), cap, terms: BTreeMap::new() }
    }

    pub fn constant(layout: &VarLayout, cap: u32, c: C) -> Self {
        Self::monomial(layout, cap, smallvec![0; layout.nvars()], c)
    }

    pub fn one(layout: &VarLayout, cap: u32) -> Self {
        Self::constant(layout, cap, C::one())
    }

    /// The coordinate function of variable `i` in group `g`.
    pub fn var(layout: &VarLayout, cap: u32, g: usize, i: usize) -> Self {
        let mut key: Exponents = smallvec![0; layout.nvars()];
        key[layout.slot(g, i)] = 1;
        Self::monomial(layout, cap, key, C::one())
    }

    pub fn monomial(layout: &VarLayout, cap: u32, key: Exponents, c: C) -> Self {
        assert_eq!(key.len(), layout.nvars(), "exponent vector length must match layout");
        let mut terms = BTreeMap::new();
        if total_degree(&key) <= cap && !c.is_zero() {
            terms.insert(key, c);
        }
        Jet { layout: layout.clone(), cap, terms }
    }

    /// Build from arbitrary terms: duplicates are summed, keys above `cap` dropped, zeros purged.
    pub fn from_terms<I: IntoIterator<Item = (Exponents, C)>>(layout: &VarLayout, cap: u32, terms: I) -> Self {
        let mut map: BTreeMap<Exponents, C> = BTreeMap::new();
        for (k, c) in terms {
            assert_eq!(k.len(), layout.nvars(), "exponent vector length must match layout");
            if total_degree(&k) > cap {
                continue;
            }
            match map.get_mut(&k) {
                Some(v) => v.add_assign(&c),
                None => {
                    map.insert(k, c);
                }
            }
        }
        map.retain(|_, v| !v.is_zero());
        Jet { layout: layout.clone(), cap, terms: map }
    }

    pub fn layout(&self) -> &VarLayout {
        &self.layout
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &[u16]) -> C {
        self.terms.get(key).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient addressed by one multi-index per group.
    pub fn coeff_at(&self, parts: &[MultiIndex]) -> Result<C> {
        let key = self.layout.join(parts)?;
        Ok(self.coeff(&key))
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0u16; self.layout.nvars()])
    }

    /// Highest total degree among stored terms.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| total_degree(k)).max()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("operands use different variable layouts".into()));
        }
        if self.cap != other.cap {
            return Err(Error::LayoutMismatch(format!(
                "operands have different degree caps ({} vs {})",
                self.cap, other.cap
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            match terms.get_mut(k) {
                Some(v) => {
                    v.add_assign(c);
                    if v.is_zero() {
                        terms.remove(k);
                    }
                }
                None => {
                    terms.insert(k.clone(), c.clone());
                }
            }
        }
        Ok(Jet { layout: self.layout.clone(), cap: self.cap, terms })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Jet::zero(&self.layout, self.cap);
        }
        self.map(|c| c.mul(s))
    }

    fn map(&self, f: impl Fn(&C) -> C) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|(k, c)| {
                let v = f(c);
                (!v.is_zero()).then(|| (k.clone(), v))
            })
            .collect();
        Jet { layout: self.layout.clone(), cap: self.cap, terms }
    }

    /// Cauchy product truncated at the common cap.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_filtered(other, |_| true)
    }

    /// Cauchy product keeping only keys accepted by `keep` (and within the cap).
    ///
    /// `keep` must describe a downward-closed set of monomials (e.g. per-group
    /// degree bounds); otherwise products of discarded terms could be missed.
    pub fn mul_filtered(&self, other: &Self, keep: impl Fn(&[u16]) -> bool) -> Result<Self> {
        self.check_compatible(other)?;
        let terms = convolve(&self.terms, &other.terms, self.cap, &keep);
        Ok(Jet { layout: self.layout.clone(), cap: self.cap, terms })
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Jet::one(&self.layout, self.cap);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Drop every stored term rejected by `keep`.
    pub fn filter(&self, keep: impl Fn(&[u16]) -> bool) -> Self {
        let terms = self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, c)| (k.clone(), c.clone())).collect();
        Jet { layout: self.layout.clone(), cap: self.cap, terms }
    }

    /// Lower the cap, discarding terms above it.
    pub fn truncate(&self, cap: u32) -> Self {
        let cap = cap.min(self.cap);
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| total_degree(k) <= cap)
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        Jet { layout: self.layout.clone(), cap, terms }
    }

    /// Re-declare the cap. Raising it asserts that the stored terms are exact
    /// through the new cap (true for polynomials); lowering truncates.
    pub fn with_cap(&self, cap: u32) -> Self {
        if cap <= self.cap {
            self.truncate(cap)
        } else {
            Jet { layout: self.layout.clone(), cap, terms: self.terms.clone() }
        }
    }

    /// Formal partial derivative `∂^order / ∂x^order` in variable `i` of group `g`.
    pub fn derive(&self, g: usize, i: usize, order: u32) -> Self {
        let slot = self.layout.slot(g, i);
        let cap = self.cap.saturating_sub(order);
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e = k[slot] as u32;
            if e < order {
                continue;
            }
            let mut falling = BigInt::one();
            for t in 0..order {
                falling *= e - t;
            }
            let mut nk = k.clone();
            nk[slot] = (e - order) as u16;
            if total_degree(&nk) > cap {
                continue;
            }
            let v = c.mul(&C::from_integer(&falling));
            if !v.is_zero() {
                terms.insert(nk, v);
            }
        }
        Jet { layout: self.layout.clone(), cap, terms }
    }

    /// Homogeneous components indexed by total degree `0..=cap`.
    fn homogeneous_parts(&self) -> Vec<BTreeMap<Exponents, C>> {
        let mut parts = vec![BTreeMap::new(); self.cap as usize + 1];
        for (k, c) in &self.terms {
            parts[total_degree(k) as usize].insert(k.clone(), c.clone());
        }
        parts
    }

    fn from_parts(layout: &VarLayout, cap: u32, parts: Vec<BTreeMap<Exponents, C>>) -> Self {
        let mut terms = BTreeMap::new();
        for p in parts {
            terms.extend(p.into_iter().filter(|(_, c)| !c.is_zero()));
        }
        Jet { layout: layout.clone(), cap, terms }
    }

    /// Multiplicative inverse, solved degree by degree.
    pub fn inv(&self) -> Result<Self> {
        let a0 = self.constant_term();
        let a0_inv = a0.inv().ok_or(Error::ZeroConstantTerm)?;
        let a = self.homogeneous_parts();
        let mut b: Vec<BTreeMap<Exponents, C>> = Vec::with_capacity(a.len());
        b.push(scale_terms(&self.one_terms(), &a0_inv));
        let minus_inv = a0_inv.neg();
        for d in 1..a.len() {
            let mut acc = BTreeMap::new();
            for e in 1..=d {
                add_into(&mut acc, convolve(&a[e], &b[d - e], u32::MAX, &|_| true));
            }
            b.push(scale_terms(&acc, &minus_inv));
        }
        Ok(Self::from_parts(&self.layout, self.cap, b))
    }

    /// `exp(a)` for `a(0) = 0`, via the Euler-operator recurrence `E f = f · E a`.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::BadConstantTerm("exp requires a zero constant term"));
        }
        let a = self.homogeneous_parts();
        let mut f: Vec<BTreeMap<Exponents, C>> = Vec::with_capacity(a.len());
        f.push(self.one_terms());
        for d in 1..a.len() {
            let mut acc = BTreeMap::new();
            for e in 1..=d {
                let ea = scale_terms(&a[e], &C::from_i64(e as i64));
                add_into(&mut acc, convolve(&ea, &f[d - e], u32::MAX, &|_| true));
            }
            let inv_d = C::from_i64(d as i64).inv().expect("nonzero degree");
            f.push(scale_terms(&acc, &inv_d));
        }
        Ok(Self::from_parts(&self.layout, self.cap, f))
    }

    /// `log(a)` for `a(0) = 1`, via `E a = a · E g`.
    pub fn log(&self) -> Result<Self> {
        if self.constant_term() != C::one() {
            return Err(Error::BadConstantTerm("log requires constant term 1"));
        }
        let a = self.homogeneous_parts();
        let mut g: Vec<BTreeMap<Exponents, C>> = vec![BTreeMap::new()];
        for d in 1..a.len() {
            let mut acc = scale_terms(&a[d], &C::from_i64(d as i64));
            for e in 1..d {
                let eg = scale_terms(&g[e], &C::from_i64(e as i64));
                let prod = convolve(&eg, &a[d - e], u32::MAX, &|_| true);
                add_into(&mut acc, neg_terms(&prod));
            }
            let inv_d = C::from_i64(d as i64).inv().expect("nonzero degree");
            g.push(scale_terms(&acc, &inv_d));
        }
        Ok(Self::from_parts(&self.layout, self.cap, g))
    }

    fn one_terms(&self) -> BTreeMap<Exponents, C> {
        let mut m = BTreeMap::new();
        m.insert(smallvec![0; self.layout.nvars()], C::one());
        m
    }

    /// Re-expand into `target`, sending each source group to a target group
    /// and optionally adding a second target group: `x ↦ t + s`.
    pub fn shift(&self, target: &VarLayout, plan: &[ShiftTarget]) -> Result<Self> {
        if plan.len() != self.layout.num_groups() {
            return Err(Error::LayoutMismatch("shift plan must cover every source group".into()));
        }
        for (g, p) in plan.iter().enumerate() {
            let n = self.layout.group(g).n;
            let ok_base = p.base < target.num_groups() && target.group(p.base).n == n;
            let ok_off = p.offset.is_none_or(|o| o < target.num_groups() && target.group(o).n == n);
            if !ok_base || !ok_off {
                return Err(Error::LayoutMismatch(format!(
                    "shift target for group {} has the wrong size",
                    self.layout.group(g).name
                )));
            }
        }
        // (source slot, base slot, offset slot)
        let mut routes = Vec::with_capacity(self.layout.nvars());
        for (g, p) in plan.iter().enumerate() {
            for i in 0..self.layout.group(g).n {
                routes.push((self.layout.slot(g, i), target.slot(p.base, i), p.offset.map(|o| target.slot(o, i))));
            }
        }
        let mut binoms: HashMap<(u32, u32), C> = HashMap::new();
        let mut out: HashMap<Exponents, C> = HashMap::new();
        for (k, c) in &self.terms {
            let mut partial: Vec<(Exponents, C)> = vec![(smallvec![0; target.nvars()], c.clone())];
            for &(src, base, off) in &routes {
                let e = k[src] as u32;
                if e == 0 {
                    continue;
                }
                match off {
                    None => {
                        for (key, _) in partial.iter_mut() {
                            key[base] += e as u16;
                        }
                    }
                    Some(off) => {
                        let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                        for (key, v) in &partial {
                            for b in 0..=e {
                                let bc = binoms.entry((e, b)).or_insert_with(|| C::from_integer(&binomial(e, b)));
                                let mut nk = key.clone();
                                nk[base] += (e - b) as u16;
                                nk[off] += b as u16;
                                next.push((nk, v.mul(bc)));
                            }
                        }
                        partial = next;
                    }
                }
            }
            for (key, v) in partial {
                match out.get_mut(&key) {
                    Some(acc) => acc.add_assign(&v),
                    None => {
                        out.insert(key, v);
                    }
                }
            }
        }
        Ok(Jet::from_terms(target, self.cap, out))
    }

    /// Set every variable of the listed groups to zero; the result drops those groups.
    pub fn eval_zero(&self, groups: &[usize]) -> Self {
        let keep_groups: Vec<usize> = (0..self.layout.num_groups()).filter(|g| !groups.contains(g)).collect();
        let new_groups: Vec<VarGroup> = keep_groups
            .iter()
            .map(|&g| {
                let mut grp = self.layout.group(g).clone();
                // A group whose partner was dropped is no longer conjugate-paired.
                if let Some(p) = self.layout.partner(g) {
                    if groups.contains(&p) {
                        grp.kind = GroupKind::Real;
                    }
                }
                grp
            })
            .collect();
        let layout = VarLayout::new(new_groups).expect("sub-layout of a valid layout");
        let mut terms = BTreeMap::new();
        'outer: for (k, c) in &self.terms {
            for &g in groups {
                if self.layout.group_degree(k, g) > 0 {
                    continue 'outer;
                }
            }
            let mut nk = Exponents::with_capacity(layout.nvars());
            for &g in &keep_groups {
                nk.extend_from_slice(&k[self.layout.range(g)]);
            }
            terms.insert(nk, c.clone());
        }
        Jet { layout, cap: self.cap, terms }
    }

    /// Embed into a larger layout (e.g. a (w,w̄)-jet into (w,w̄,u,ū)), mapping group `g` to `targets[g]`.
    pub fn embed(&self, target: &VarLayout, targets: &[usize]) -> Result<Self> {
        let plan: Vec<ShiftTarget> = targets.iter().map(|&t| ShiftTarget { base: t, offset: None }).collect();
        self.shift(target, &plan)
    }

    /// Swap every conjugate pair of groups and conjugate the coefficients.
    pub fn conj(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut nk = k.clone();
            for g in 0..self.layout.num_groups() {
                if let Some(p) = self.layout.partner(g) {
                    let src = self.layout.range(p);
                    let dst = self.layout.range(g);
                    nk[dst].copy_from_slice(&k[src]);
                }
            }
            terms.insert(nk, c.conj());
        }
        Jet { layout: self.layout.clone(), cap: self.cap, terms }
    }

    /// `c(α,β,…) = conj(c(β,α,…))` for every conjugate pair.
    pub fn is_hermitian(&self) -> bool {
        self.conj() == *self
    }

    /// Evaluate the truncated polynomial at a point given per flat variable slot.
    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        self.eval_by_degree(point).iter().sum()
    }

    /// Contributions of each total degree `0..=cap` at a point.
    pub fn eval_by_degree(&self, point: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(point.len(), self.layout.nvars(), "point dimension must match layout");
        let mut out = vec![Complex64::new(0.0, 0.0); self.cap as usize + 1];
        for (k, c) in &self.terms {
            let mut m = c.to_c64();
            for (x, &e) in point.iter().zip(k.iter()) {
                if e > 0 {
                    m *= x.powu(e as u32);
                }
            }
            out[total_degree(k) as usize] += m;
        }
        out
    }

    /// Substitute jets for every variable: `x_s ↦ images[s]`, each with zero constant term.
    pub fn substitute(&self, images: &[Jet<C>]) -> Result<Jet<C>> {
        if images.len() != self.layout.nvars() {
            return Err(Error::LayoutMismatch("one image per variable is required".into()));
        }
        let target = images.first().map(|j| (j.layout.clone(), j.cap)).ok_or_else(|| {
            Error::LayoutMismatch("substitution needs at least one variable".into())
        })?;
        for im in images {
            if !im.constant_term().is_zero() {
                return Err(Error::BadConstantTerm("substituted series must vanish at the origin"));
            }
        }
        let mut powers: HashMap<(usize, u16), Jet<C>> = HashMap::new();
        let mut acc = Jet::zero(&target.0, target.1);
        for (k, c) in &self.terms {
            let mut term = Jet::constant(&target.0, target.1, c.clone());
            for (s, &e) in k.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = match powers.get(&(s, e)) {
                    Some(p) => p.clone(),
                    None => {
                        let p = images[s].pow(e as u32)?;
                        powers.insert((s, e), p.clone());
                        p
                    }
                };
                term = term.mul(&p)?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    pub fn to_float(&self) -> Jet<Complex64> {
        Jet {
            layout: self.layout.clone(),
            cap: self.cap,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.to_c64())).collect(),
        }
    }

    /// Drop float coefficients with magnitude below `eps`.
    pub fn prune_below(&self, eps: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.to_c64().norm() >= eps)
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        Jet { layout: self.layout.clone(), cap: self.cap, terms }
    }

    /// Reinterpret the coefficients under a different layout with the same variable count.
    pub fn relabel(&self, layout: &VarLayout) -> Result<Self> {
        if layout.nvars() != self.layout.nvars() {
            return Err(Error::LayoutMismatch("relabel requires the same number of variables".into()));
        }
        Ok(Jet { layout: layout.clone(), cap: self.cap, terms: self.terms.clone() })
    }

    /// Sum of many jets with per-coefficient [`Coeff::accumulate`], in the given order.
    pub fn sum(layout: &VarLayout, cap: u32, jets: &[Jet<C>]) -> Result<Self> {
        let mut buckets: BTreeMap<Exponents, Vec<C>> = BTreeMap::new();
        for j in jets {
            if j.layout != *layout || j.cap != cap {
                return Err(Error::LayoutMismatch("summands must share layout and cap".into()));
            }
            for (k, c) in &j.terms {
                buckets.entry(k.clone()).or_default().push(c.clone());
            }
        }
        let terms = buckets
            .into_iter()
            .filter_map(|(k, cs)| {
                let v = C::accumulate(cs.iter());
                (!v.is_zero()).then_some((k, v))
            })
            .collect();
        Ok(Jet { layout: layout.clone(), cap, terms })
    }
}

/// Destination of one source group under [`Jet::shift`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftTarget {
    pub base: usize,
    pub offset: Option<usize>,
}

fn scale_terms<C: Coeff>(t: &BTreeMap<Exponents, C>, s: &C) -> BTreeMap<Exponents, C> {
    t.iter()
        .filter_map(|(k, c)| {
            let v = c.mul(s);
            (!v.is_zero()).then(|| (k.clone(), v))
        })
        .collect()
}

fn neg_terms<C: Coeff>(t: &BTreeMap<Exponents, C>) -> BTreeMap<Exponents, C> {
    t.iter().map(|(k, c)| (k.clone(), c.neg())).collect()
}

fn add_into<C: Coeff>(acc: &mut BTreeMap<Exponents, C>, other: BTreeMap<Exponents, C>) {
    for (k, c) in other {
        match acc.get_mut(&k) {
            Some(v) => v.add_assign(&c),
            None => {
                acc.insert(k, c);
            }
        }
    }
    acc.retain(|_, v| !v.is_zero());
}

fn convolve<C: Coeff>(
    a: &BTreeMap<Exponents, C>,
    b: &BTreeMap<Exponents, C>,
    cap: u32,
    keep: &dyn Fn(&[u16]) -> bool,
) -> BTreeMap<Exponents, C> {
    let mut bs: Vec<(u32, &Exponents, &C)> = b.iter().map(|(k, c)| (total_degree(k), k, c)).collect();
    bs.sort_by_key(|t| t.0);
    let mut out: HashMap<Exponents, C> = HashMap::new();
    for (ka, ca) in a {
        let da = total_degree(ka);
        if da > cap {
            continue;
        }
        for &(db, kb, cb) in &bs {
            if da + db > cap {
                break;
            }
            let key: Exponents = ka.iter().zip(kb.iter()).map(|(x, y)| x + y).collect();
            if !keep(&key) {
                continue;
            }
            let v = ca.mul(cb);
            match out.get_mut(&key) {
                Some(acc) => acc.add_assign(&v),
                None => {
                    out.insert(key, v);
                }
            }
        }
    }
    out.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

/// Square matrix of jets.
pub type JetMatrix<C> = Vec<Vec<Jet<C>>>;

fn check_square<T>(m: &[Vec<T>]) -> Result<usize> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(Error::NotSquare);
    }
    Ok(n)
}

/// Determinant by cofactor expansion along the first row.
pub fn det<C: Coeff>(m: &JetMatrix<C>) -> Result<Jet<C>> {
    let n = check_square(m)?;
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc = Jet::zero(m[0][0].layout(), m[0][0].cap());
    for col in 0..n {
        let minor: JetMatrix<C> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, j)| j.clone()).collect())
            .collect();
        let term = m[0][col].mul(&det(&minor)?)?;
        acc = if col % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
    }
    Ok(acc)
}

/// Determinant of a scalar matrix by Gaussian elimination.
pub fn scalar_det<C: Coeff>(m: &[Vec<C>]) -> Result<C> {
    let n = check_square(m)?;
    let mut a: Vec<Vec<C>> = m.to_vec();
    let mut det = C::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Ok(C::zero());
        };
        if pivot != col {
            a.swap(pivot, col);
            det = det.neg();
        }
        let p = a[col][col].clone();
        det = det.mul(&p);
        let p_inv = p.inv().expect("nonzero pivot");
        for r in col + 1..n {
            let f = a[r][col].mul(&p_inv);
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = a[r][c].sub(&f.mul(&a[col][c]));
                a[r][c] = v;
            }
        }
    }
    Ok(det)
}

/// Inverse of a scalar matrix by Gauss–Jordan elimination.
pub fn scalar_inverse<C: Coeff>(m: &[Vec<C>]) -> Result<Vec<Vec<C>>> {
    let n = check_square(m)?;
    let mut a: Vec<Vec<C>> = m.to_vec();
    let mut inv: Vec<Vec<C>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::DegenerateMetric)?;
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let p_inv = a[col][col].inv().expect("nonzero pivot");
        for c in 0..n {
            a[col][c] = a[col][c].mul(&p_inv);
            inv[col][c] = inv[col][c].mul(&p_inv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                a[r][c] = a[r][c].sub(&f.mul(&a[col][c]));
                inv[r][c] = inv[r][c].sub(&f.mul(&inv[col][c]));
            }
        }
    }
    Ok(inv)
}

/// Inverse of a jet matrix, solved degree by degree from the constant part.
pub fn matrix_inverse<C: Coeff>(m: &JetMatrix<C>) -> Result<JetMatrix<C>> {
    let n = check_square(m)?;
    let layout = m[0][0].layout().clone();
    let cap = m[0][0].cap();
    let m0: Vec<Vec<C>> = m.iter().map(|row| row.iter().map(|j| j.constant_term()).collect()).collect();
    let m0_inv = scalar_inverse(&m0)?;
    let x0: JetMatrix<C> =
        m0_inv.iter().map(|row| row.iter().map(|c| Jet::constant(&layout, cap, c.clone())).collect()).collect();
    // X = X0 (I - M̃ X)  with M̃ = M - M0; iterate until degree `cap` is reached.
    let tilde: JetMatrix<C> = m
        .iter()
        .map(|row| row.iter().map(|j| j.filter(|k| total_degree(k) > 0)).collect())
        .collect();
    let mut x = x0.clone();
    for _ in 0..cap {
        let mx = mat_mul(&tilde, &x)?;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc = x0[i][j].clone();
                for l in 0..n {
                    acc = acc.sub(&x0[i][l].mul(&mx[l][j])?)?;
                }
                row.push(acc);
            }
            next.push(row);
        }
        if next == x {
            break;
        }
        x = next;
    }
    Ok(x)
}

pub fn mat_mul<C: Coeff>(a: &JetMatrix<C>, b: &JetMatrix<C>) -> Result<JetMatrix<C>> {
    let n = check_square(a)?;
    check_square(b)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = Jet::zero(a[0][0].layout(), a[0][0].cap());
            for l in 0..n {
                acc = acc.add(&a[i][l].mul(&b[l][j])?)?;
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(out)
}

/// Jet in either arithmetic mode, for code paths where the mode is chosen at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyJet {
    Exact(Jet<crate::scalar::Exact>),
    Float(Jet<Complex64>),
}

impl AnyJet {
    pub fn mode(&self) -> crate::scalar::Mode {
        match self {
            AnyJet::Exact(_) => crate::scalar::Mode::Exact,
            AnyJet::Float(_) => crate::scalar::Mode::Float,
        }
    }

    pub fn add(&self, other: &AnyJet) -> Result<AnyJet> {
        match (self, other) {
            (AnyJet::Exact(a), AnyJet::Exact(b)) => Ok(AnyJet::Exact(a.add(b)?)),
            (AnyJet::Float(a), AnyJet::Float(b)) => Ok(AnyJet::Float(a.add(b)?)),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn mul(&self, other: &AnyJet) -> Result<AnyJet> {
        match (self, other) {
            (AnyJet::Exact(a), AnyJet::Exact(b)) => Ok(AnyJet::Exact(a.mul(b)?)),
            (AnyJet::Float(a), AnyJet::Float(b)) => Ok(AnyJet::Float(a.mul(b)?)),
            _ => Err(Error::ModeMismatch),
        }
    }
}
