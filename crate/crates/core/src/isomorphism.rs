//! AHU canonical codes for rooted trees and the quantities built on them:
//! multiplicities `M(u)`, correction factors `corr_u(v)`, the embedding count
//! `Aut(u)` and the root-independent constant `c(u) = M(u) * prod_w corr_u(w)`.
//!
//! Codes are interned per [`CodeTable`]; two subtrees analysed in the same
//! table get equal codes iff they are isomorphic as rooted trees. Codes are
//! not comparable across tables; use [`CodeTable::serialize`] for that.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::Result;
use crate::tree::FreeTree;

pub type Code = u32;

/// Intern table from sorted child-code tuples to code ids.
#[derive(Debug, Default, Clone)]
pub struct CodeTable {
    ids: HashMap<Vec<Code>, Code>,
    forms: Vec<Vec<Code>>,
}

impl CodeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Code of a node whose children carry `children` (any order).
    pub fn intern(&mut self, mut children: Vec<Code>) -> Code {
        children.sort_unstable();
        if let Some(&id) = self.ids.get(&children) {
            return id;
        }
        let id = self.forms.len() as Code;
        self.forms.push(children.clone());
        self.ids.insert(children, id);
        id
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn children_of(&self, code: Code) -> &[Code] {
        &self.forms[code as usize]
    }

    /// Portable parenthesised form, children in canonical order.
    pub fn serialize(&self, code: Code) -> String {
        let mut memo: HashMap<Code, String> = HashMap::new();
        self.serialize_memo(code, &mut memo)
    }

    fn serialize_memo(&self, code: Code, memo: &mut HashMap<Code, String>) -> String {
        if let Some(s) = memo.get(&code) {
            return s.clone();
        }
        let mut parts: Vec<String> = self.forms[code as usize].iter().map(|&c| self.serialize_memo(c, memo)).collect();
        parts.sort_unstable();
        let s = format!("({})", parts.concat());
        memo.insert(code, s.clone());
        s
    }

    /// Debug dump of the table.
    pub fn dump_json(&self) -> Value {
        let codes: Vec<Value> = self
            .forms
            .iter()
            .enumerate()
            .map(|(id, children)| json!({"id": id, "children": children}))
            .collect();
        json!({ "codes": codes })
    }
}

/// Code of every node's subtree in the `u`-rooted tree.
pub fn subtree_codes_in(table: &mut CodeTable, f: &FreeTree, u: usize) -> Vec<Code> {
    let (parent, order) = f.hang(u);
    let mut codes = vec![0; f.n()];
    for &v in order.iter().rev() {
        let kids = f
            .neighbors(v)
            .iter()
            .filter(|&&w| parent[v] != Some(w))
            .map(|&w| codes[w])
            .collect();
        codes[v] = table.intern(kids);
    }
    codes
}

/// Whole-tree code for every choice of root, recomputing from scratch per root.
pub fn all_root_codes_baseline(table: &mut CodeTable, f: &FreeTree) -> Vec<Code> {
    (0..f.n()).map(|u| subtree_codes_in(table, f, u)[u]).collect()
}

/// Whole-tree code for every root by rerooting: one downward pass from node 0,
/// one upward pass building the code of each parent's remainder. Children of a
/// node that share a code share their upward code, so the cost is driven by the
/// number of distinct child classes per node rather than raw degree.
pub fn all_root_codes_rerooting(table: &mut CodeTable, f: &FreeTree) -> Vec<Code> {
    let n = f.n();
    let (parent, order) = f.hang(0);
    let mut down = vec![0; n];
    for &v in order.iter().rev() {
        let kids = f
            .neighbors(v)
            .iter()
            .filter(|&&w| parent[v] != Some(w))
            .map(|&w| down[w])
            .collect();
        down[v] = table.intern(kids);
    }
    // up[v]: code of parent(v)'s side, rooted at parent(v), once edge v-parent(v) is cut.
    let mut up: Vec<Option<Code>> = vec![None; n];
    let mut full = vec![0; n];
    for &p in &order {
        let kids: Vec<usize> = f.neighbors(p).iter().copied().filter(|&w| parent[p] != Some(w)).collect();
        let mut around: Vec<Code> = kids.iter().map(|&c| down[c]).collect();
        around.extend(up[p]);
        full[p] = table.intern(around.clone());
        let mut by_code: HashMap<Code, Code> = HashMap::new();
        for &c in &kids {
            let code = *by_code.entry(down[c]).or_insert_with(|| {
                let mut rest = around.clone();
                let pos = rest.iter().position(|&x| x == down[c]).expect("child code present");
                rest.swap_remove(pos);
                table.intern(rest)
            });
            up[c] = Some(code);
        }
    }
    full
}

pub fn subtree_codes(f: &FreeTree, u: usize) -> Result<(CodeTable, Vec<Code>)> {
    f.reroot(u)?;
    let mut table = CodeTable::new();
    let codes = subtree_codes_in(&mut table, f, u);
    Ok((table, codes))
}

/// Whole-tree codes for all rootings in a fresh table (rerooting path).
pub fn all_root_codes(f: &FreeTree) -> (CodeTable, Vec<Code>) {
    let mut table = CodeTable::new();
    let codes = all_root_codes_rerooting(&mut table, f);
    (table, codes)
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Product of factorials of the class sizes in a multiset of codes.
fn class_factorial_product(codes: &mut [Code]) -> BigUint {
    codes.sort_unstable();
    let mut product = BigUint::one();
    let mut i = 0;
    while i < codes.len() {
        let j = i + codes[i..].iter().take_while(|&&c| c == codes[i]).count();
        if j - i > 1 {
            product *= factorial(j - i);
        }
        i = j;
    }
    product
}

/// Per-tree analysis session: one code table, all-root codes computed once.
pub struct TreeAnalysis<'a> {
    tree: &'a FreeTree,
    table: CodeTable,
    root_codes: Vec<Code>,
    class_sizes: HashMap<Code, usize>,
}

impl<'a> TreeAnalysis<'a> {
    pub fn new(tree: &'a FreeTree) -> Self {
        let mut table = CodeTable::new();
        let root_codes = all_root_codes_rerooting(&mut table, tree);
        Self::with_codes(tree, table, root_codes)
    }

    /// Same as [`new`](Self::new) but through the per-root baseline.
    pub fn new_baseline(tree: &'a FreeTree) -> Self {
        let mut table = CodeTable::new();
        let root_codes = all_root_codes_baseline(&mut table, tree);
        Self::with_codes(tree, table, root_codes)
    }

    fn with_codes(tree: &'a FreeTree, table: CodeTable, root_codes: Vec<Code>) -> Self {
        let mut class_sizes = HashMap::new();
        for &c in &root_codes {
            *class_sizes.entry(c).or_insert(0) += 1;
        }
        Self { tree, table, root_codes, class_sizes }
    }

    pub fn tree(&self) -> &'a FreeTree {
        self.tree
    }

    pub fn table(&self) -> &CodeTable {
        &self.table
    }

    pub fn root_codes(&self) -> &[Code] {
        &self.root_codes
    }

    pub fn subtree_codes(&mut self, u: usize) -> Vec<Code> {
        subtree_codes_in(&mut self.table, self.tree, u)
    }

    /// Serialised canonical form of the `u`-rooted tree.
    pub fn canonical_form(&self, u: usize) -> String {
        self.table.serialize(self.root_codes[u])
    }

    /// `M(u)`: the number of nodes `v` whose rooting is isomorphic to `u`'s.
    pub fn multiplicity(&self, u: usize) -> usize {
        self.class_sizes[&self.root_codes[u]]
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        (0..self.tree.n()).map(|u| self.multiplicity(u)).collect()
    }

    /// Orbits of the automorphism group, each sorted, ordered by smallest member.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut groups: HashMap<Code, Vec<usize>> = HashMap::new();
        for (u, &c) in self.root_codes.iter().enumerate() {
            groups.entry(c).or_default().push(u);
        }
        let mut orbits: Vec<Vec<usize>> = groups.into_values().collect();
        orbits.sort_unstable_by_key(|o| o[0]);
        orbits
    }

    /// Whether `u` and `v` are clones.
    pub fn clones(&self, u: usize, v: usize) -> bool {
        self.root_codes[u] == self.root_codes[v]
    }

    /// `corr_u(v)` for every `v`.
    pub fn correction_factors(&mut self, u: usize) -> Vec<BigUint> {
        let codes = self.subtree_codes(u);
        let (parent, _) = self.tree.hang(u);
        (0..self.tree.n())
            .map(|v| {
                let mut kids: Vec<Code> = self
                    .tree
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| parent[v] != Some(w))
                    .map(|&w| codes[w])
                    .collect();
                class_factorial_product(&mut kids)
            })
            .collect()
    }

    /// `Aut(u) = prod_v deg_u(v)! / corr_u(v)`, the number of distinct plane
    /// embeddings of the `u`-rooted tree.
    pub fn embedding_count(&mut self, u: usize) -> BigUint {
        let corr = self.correction_factors(u);
        let mut total = BigUint::one();
        for (v, c) in corr.iter().enumerate() {
            let tree_degree = self.tree.degree(v) - usize::from(v != u);
            total *= factorial(tree_degree) / c;
        }
        total
    }

    /// `c(u) = M(u) * prod_w corr_u(w)`.
    pub fn invariant_c(&mut self, u: usize) -> BigUint {
        let corr = self.correction_factors(u);
        corr.iter().fold(BigUint::from(self.multiplicity(u)), |acc, c| acc * c)
    }
}

pub fn multiplicity(f: &FreeTree, u: usize) -> Result<usize> {
    f.reroot(u)?;
    Ok(TreeAnalysis::new(f).multiplicity(u))
}

pub fn correction_factors(f: &FreeTree, u: usize) -> Result<Vec<BigUint>> {
    f.reroot(u)?;
    Ok(TreeAnalysis::new(f).correction_factors(u))
}

pub fn embedding_count(f: &FreeTree, u: usize) -> Result<BigUint> {
    f.reroot(u)?;
    Ok(TreeAnalysis::new(f).embedding_count(u))
}

pub fn invariant_c(f: &FreeTree, u: usize) -> Result<BigUint> {
    f.reroot(u)?;
    Ok(TreeAnalysis::new(f).invariant_c(u))
}
