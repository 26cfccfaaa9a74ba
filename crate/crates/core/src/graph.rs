//! Causal network structure: typed variables and a DAG over them.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// State label used by manipulation variables for "not part of the experiment".
pub const NOT_EXPERIMENTAL: &str = "ne";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Domain,
    Selection,
    Manipulation,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Domain => "domain",
            Role::Selection => "selection",
            Role::Manipulation => "manipulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub role: Role,
    pub states: Vec<String>,
    /// Never observed in any case. Domain variables only.
    pub latent: bool,
    /// The domain variable a manipulation variable controls.
    pub target: Option<String>,
    /// Index of the distinguished unsampled state. Selection variable only.
    pub unsampled: Option<usize>,
}

impl VariableSpec {
    pub fn domain<S: Into<String>>(name: S, states: &[&str]) -> Self {
        Self {
            name: name.into(),
            role: Role::Domain,
            states: states.iter().map(|s| s.to_string()).collect(),
            latent: false,
            target: None,
            unsampled: None,
        }
    }

    /// Binary domain variable with states `T`, `F` (in that order).
    pub fn binary<S: Into<String>>(name: S) -> Self {
        Self::domain(name, &["T", "F"])
    }

    pub fn selection<S: Into<String>>(name: S, states: &[&str], unsampled: &str) -> Self {
        let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let idx = states.iter().position(|s| s == unsampled);
        Self { name: name.into(), role: Role::Selection, states, latent: false, target: None, unsampled: idx }
    }

    /// Manipulation variable for `target`: the target's states plus `ne`.
    pub fn manipulation<S: Into<String>>(name: S, target: &VariableSpec) -> Self {
        let mut states = target.states.clone();
        states.push(NOT_EXPERIMENTAL.to_string());
        Self {
            name: name.into(),
            role: Role::Manipulation,
            states,
            latent: false,
            target: Some(target.name.clone()),
            unsampled: None,
        }
    }

    pub fn latent(mut self) -> Self {
        self.latent = true;
        self
    }

    pub fn arity(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn require_state(&self, label: &str) -> Result<usize> {
        self.state_index(label).ok_or_else(|| Error::UnknownState {
            variable: self.name.clone(),
            state: label.to_string(),
        })
    }

    fn invalid(&self, reason: &str) -> Error {
        Error::InvalidVariable { name: self.name.clone(), reason: reason.to_string() }
    }

    fn check_local(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(self.invalid("empty name"));
        }
        if self.states.len() < 2 {
            return Err(self.invalid("needs at least two states"));
        }
        let unique: BTreeSet<&String> = self.states.iter().collect();
        if unique.len() != self.states.len() {
            return Err(self.invalid("state labels must be unique"));
        }
        if self.latent && self.role != Role::Domain {
            return Err(self.invalid("only domain variables may be latent"));
        }
        match self.role {
            Role::Selection => {
                if self.unsampled.is_none_or(|u| u >= self.states.len()) {
                    return Err(self.invalid("selection variable needs a declared unsampled state"));
                }
                if self.target.is_some() {
                    return Err(self.invalid("target is only valid for manipulation variables"));
                }
            }
            Role::Manipulation => {
                if self.target.is_none() {
                    return Err(self.invalid("manipulation variable needs a target"));
                }
                if self.unsampled.is_some() {
                    return Err(self.invalid("unsampled state is only valid for the selection variable"));
                }
            }
            Role::Domain => {
                if self.target.is_some() || self.unsampled.is_some() {
                    return Err(self.invalid("target/unsampled are not valid for domain variables"));
                }
            }
        }
        Ok(())
    }
}

/// A DAG over declared variables. Parent lists are kept sorted by
/// declaration index; that order also defines parent-configuration indexing
/// (first parent most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStructure {
    variables: Arc<Vec<VariableSpec>>,
    parents: Vec<Vec<usize>>,
    manipulation_constraint: bool,
}

impl NetworkStructure {
    /// Structure with no edges.
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        let n = variables.len();
        let s = Self { variables: Arc::new(variables), parents: vec![Vec::new(); n], manipulation_constraint: false };
        s.check_variables()?;
        Ok(s)
    }

    pub fn with_edges(variables: Vec<VariableSpec>, edges: &[(&str, &str)]) -> Result<Self> {
        let mut s = Self::new(variables)?;
        for &(p, c) in edges {
            let (pi, ci) = (s.require(p)?, s.require(c)?);
            s.insert_edge_unchecked(pi, ci)?;
        }
        s.check_acyclic()?;
        Ok(s)
    }

    /// Same variables, new parent sets. Parent lists need not be sorted.
    pub fn with_parents(&self, parents: Vec<Vec<usize>>) -> Result<Self> {
        if parents.len() != self.len() {
            return Err(Error::InvalidStructure("parent list length mismatch".into()));
        }
        let mut s = Self {
            variables: self.variables.clone(),
            parents: vec![Vec::new(); self.len()],
            manipulation_constraint: self.manipulation_constraint,
        };
        for (c, ps) in parents.into_iter().enumerate() {
            for p in ps {
                s.insert_edge_unchecked(p, c)?;
            }
        }
        s.check_acyclic()?;
        if s.manipulation_constraint {
            s.check_manipulation()?;
        }
        Ok(s)
    }

    /// Same variables, no edges.
    pub fn empty_like(&self) -> Self {
        Self {
            variables: self.variables.clone(),
            parents: vec![Vec::new(); self.len()],
            manipulation_constraint: false,
        }
    }

    /// Require every manipulation variable present together with its target
    /// to be a root with an edge into the target.
    pub fn enforce_manipulation_constraint(mut self) -> Result<Self> {
        self.check_manipulation()?;
        self.manipulation_constraint = true;
        Ok(self)
    }

    /// Drops the manipulation constraint, e.g. for structures produced by
    /// arc reversal that only serve as a computational device.
    pub fn without_manipulation_constraint(mut self) -> Self {
        self.manipulation_constraint = false;
        self
    }

    pub fn manipulation_constraint(&self) -> bool {
        self.manipulation_constraint
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn shared_variables(&self) -> Arc<Vec<VariableSpec>> {
        self.variables.clone()
    }

    pub fn variable(&self, i: usize) -> &VariableSpec {
        &self.variables[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.variables[i].name
    }

    pub fn arity(&self, i: usize) -> usize {
        self.variables[i].states.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn selection(&self) -> Option<usize> {
        self.variables.iter().position(|v| v.role == Role::Selection)
    }

    pub fn require_selection(&self) -> Result<usize> {
        self.selection().ok_or(Error::NoSelectionVariable)
    }

    /// Index of a selection variable's unsampled state.
    pub fn unsampled_state(&self) -> Option<usize> {
        self.selection().and_then(|s| self.variables[s].unsampled)
    }

    pub fn latent_variables(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.variables[i].latent).collect()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parents[c].contains(&i)).collect()
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.parents[child].binary_search(&parent).is_ok()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Edges as `(parent, child)`, ordered by child then parent.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((p, c));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn add_edge(&mut self, parent: usize, child: usize) -> Result<()> {
        if let Some(path) = self.directed_path(child, parent) {
            let mut cycle: Vec<String> = vec![self.name(parent).to_string()];
            cycle.extend(path.iter().map(|&v| self.name(v).to_string()));
            return Err(Error::Cycle(cycle));
        }
        self.insert_edge_unchecked(parent, child)?;
        if self.manipulation_constraint {
            if let Err(e) = self.check_manipulation() {
                self.remove_edge(parent, child);
                return Err(e);
            }
        }
        Ok(())
    }

    /// Removes the edge if present; returns whether it was.
    pub fn remove_edge(&mut self, parent: usize, child: usize) -> bool {
        match self.parents[child].binary_search(&parent) {
            Ok(pos) => {
                self.parents[child].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    fn insert_edge_unchecked(&mut self, parent: usize, child: usize) -> Result<()> {
        let n = self.len();
        if parent >= n || child >= n {
            return Err(Error::InvalidStructure("edge endpoint out of range".into()));
        }
        if parent == child {
            return Err(Error::SelfLoop(self.name(parent).to_string()));
        }
        if let Err(pos) = self.parents[child].binary_search(&parent) {
            self.parents[child].insert(pos, parent);
        }
        Ok(())
    }

    fn check_variables(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut selection = 0;
        for v in self.variables.iter() {
            v.check_local()?;
            if !seen.insert(v.name.as_str()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            if v.role == Role::Selection {
                selection += 1;
            }
        }
        if selection > 1 {
            return Err(Error::InvalidStructure("at most one selection variable is allowed".into()));
        }
        for v in self.variables.iter().filter(|v| v.role == Role::Manipulation) {
            let target = v.target.as_deref().unwrap_or_default();
            let t = self.index_of(target).ok_or_else(|| Error::UnknownVariable(target.to_string()))?;
            let tv = &self.variables[t];
            if tv.role != Role::Domain {
                return Err(v.invalid("target must be a domain variable"));
            }
            let mut expected = tv.states.clone();
            expected.push(NOT_EXPERIMENTAL.to_string());
            if v.states != expected {
                return Err(v.invalid("states must equal the target's states plus `ne`"));
            }
        }
        Ok(())
    }

    fn check_manipulation(&self) -> Result<()> {
        for (q, v) in self.variables.iter().enumerate() {
            if v.role != Role::Manipulation {
                continue;
            }
            let t = self.require(v.target.as_deref().unwrap_or_default())?;
            if !self.parents[q].is_empty() {
                return Err(Error::InvalidStructure(format!("manipulation variable `{}` must have no parents", v.name)));
            }
            if !self.has_edge(q, t) {
                return Err(Error::InvalidStructure(format!(
                    "manipulation variable `{}` needs an edge into `{}`",
                    v.name,
                    self.name(t)
                )));
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<()> {
        self.topological_order().map(|_| ())
    }

    /// A directed path `from -> ... -> to` (inclusive), if one exists.
    pub fn directed_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.len();
        let children: Vec<Vec<usize>> = (0..n).map(|i| self.children(i)).collect();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[from] = true;
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &c in &children[v] {
                if !seen[c] {
                    seen[c] = true;
                    prev[c] = v;
                    queue.push_back(c);
                }
            }
        }
        None
    }

    /// Transitive closure of the parent relation, `node` excluded, ascending.
    pub fn ancestors(&self, node: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = self.parents[node].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend_from_slice(&self.parents[v]);
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    pub fn descendants(&self, node: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = self.children(node);
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(self.children(v));
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    /// Ancestors of a named node, by name.
    pub fn ancestors_of(&self, name: &str) -> Result<BTreeSet<String>> {
        let i = self.require(name)?;
        Ok(self.ancestors(i).into_iter().map(|a| self.name(a).to_string()).collect())
    }

    /// Kahn's algorithm; among ready nodes the earliest declared goes first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let children: Vec<Vec<usize>> = (0..n).map(|i| self.children(i)).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        Err(Error::Cycle(self.find_cycle(&indegree)))
    }

    fn find_cycle(&self, indegree: &[usize]) -> Vec<String> {
        // Every node left with positive indegree has a parent also left over;
        // walk parents until a node repeats.
        let start = (0..self.len()).find(|&i| indegree[i] > 0).unwrap_or(0);
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        let mut walk = Vec::new();
        let mut cur = start;
        loop {
            if let Some(&at) = pos.get(&cur) {
                let mut cycle: Vec<String> = walk[at..].iter().rev().map(|&v| self.name(v).to_string()).collect();
                cycle.push(cycle[0].clone());
                return cycle;
            }
            pos.insert(cur, walk.len());
            walk.push(cur);
            cur = match self.parents[cur].iter().copied().find(|&p| indegree[p] > 0) {
                Some(p) => p,
                None => return vec![self.name(cur).to_string()],
            };
        }
    }

    /// Standard d-separation by reachability ("Bayes ball").
    pub fn d_separated(&self, x: usize, y: usize, given: &[usize]) -> Result<bool> {
        let n = self.len();
        if x >= n || y >= n || given.iter().any(|&g| g >= n) {
            return Err(Error::InvalidStructure("d-separation query index out of range".into()));
        }
        if x == y {
            return Err(Error::InvalidStructure("d-separation needs two distinct variables".into()));
        }
        if given.contains(&x) || given.contains(&y) {
            return Err(Error::InvalidStructure("query variables cannot be in the conditioning set".into()));
        }
        let mut observed = vec![false; n];
        for &g in given {
            observed[g] = true;
        }
        // Nodes that are observed or have an observed descendant.
        let mut opens_collider = observed.clone();
        let mut stack: Vec<usize> = given.to_vec();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !opens_collider[p] {
                    opens_collider[p] = true;
                    stack.push(p);
                }
            }
        }
        let children: Vec<Vec<usize>> = (0..n).map(|i| self.children(i)).collect();
        // (node, arrived_from_child)
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        queue.push_back((x, true));
        while let Some((v, up)) = queue.pop_front() {
            let slot = usize::from(up);
            if visited[v][slot] {
                continue;
            }
            visited[v][slot] = true;
            if v == y && !observed[v] {
                return Ok(false);
            }
            if up {
                if !observed[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed[v] {
                    queue.extend(children[v].iter().map(|&c| (c, false)));
                }
                if opens_collider[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        Ok(true)
    }

    /// d-separation by variable names.
    pub fn d_separated_names(&self, x: &str, y: &str, given: &[&str]) -> Result<bool> {
        let xi = self.require(x)?;
        let yi = self.require(y)?;
        let g = given.iter().map(|g| self.require(g)).collect::<Result<Vec<_>>>()?;
        self.d_separated(xi, yi, &g)
    }

    /// Number of parent configurations of `i`'s family.
    pub fn parent_configs(&self, i: usize) -> usize {
        self.parents[i].iter().map(|&p| self.arity(p)).product()
    }

    /// Row index of `i`'s family for a complete assignment.
    pub fn row_index(&self, i: usize, states: &[usize]) -> usize {
        let mut row = 0;
        for &p in &self.parents[i] {
            row = row * self.arity(p) + states[p];
        }
        row
    }

    /// Row index when every parent is observed.
    pub fn row_index_partial(&self, i: usize, states: &[Option<usize>]) -> Option<usize> {
        let mut row = 0;
        for &p in &self.parents[i] {
            row = row * self.arity(p) + states[p]?;
        }
        Some(row)
    }

    /// Free parameters: sum over variables of (arity - 1) x parent configurations.
    pub fn parameter_count(&self) -> u64 {
        (0..self.len())
            .map(|i| {
                let rows = self.parents[i].iter().fold(1u64, |acc, &p| acc.saturating_mul(self.arity(p) as u64));
                rows.saturating_mul(self.arity(i) as u64 - 1)
            })
            .fold(0u64, u64::saturating_add)
    }

    fn skeleton(&self) -> BTreeSet<(String, String)> {
        self.edges()
            .into_iter()
            .map(|(p, c)| {
                let (a, b) = (self.name(p).to_string(), self.name(c).to_string());
                if a <= b { (a, b) } else { (b, a) }
            })
            .collect()
    }

    /// Unshielded colliders `a -> c <- b` as `(min(a,b), c, max(a,b))` by name.
    pub fn v_structures(&self) -> BTreeSet<(String, String, String)> {
        let mut out = BTreeSet::new();
        for c in 0..self.len() {
            let ps = &self.parents[c];
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !self.is_adjacent(a, b) {
                        let (na, nb) = (self.name(a).to_string(), self.name(b).to_string());
                        let (lo, hi) = if na <= nb { (na, nb) } else { (nb, na) };
                        out.insert((lo, self.name(c).to_string(), hi));
                    }
                }
            }
        }
        out
    }

    /// Same skeleton and same unshielded colliders.
    pub fn markov_equivalent(&self, other: &NetworkStructure) -> Result<bool> {
        let mine: BTreeSet<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let theirs: BTreeSet<&str> = other.variables.iter().map(|v| v.name.as_str()).collect();
        if mine != theirs {
            return Err(Error::InvalidStructure("structures are over different variable sets".into()));
        }
        Ok(self.skeleton() == other.skeleton() && self.v_structures() == other.v_structures())
    }

    /// Sorted `parent->child` list joined by commas; the empty graph is `""`.
    pub fn canonical_encoding(&self) -> String {
        let mut edges: Vec<String> =
            self.edges().into_iter().map(|(p, c)| format!("{}->{}", self.name(p), self.name(c))).collect();
        edges.sort();
        edges.join(",")
    }

    /// Edge list by name.
    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges().into_iter().map(|(p, c)| (self.name(p).to_string(), self.name(c).to_string())).collect()
    }

    /// Checks that a (possibly partial) case is ancestrally closed: every
    /// observed variable has all its parents observed.
    pub fn check_closed(&self, case_index: usize, states: &[Option<usize>]) -> Result<()> {
        for i in 0..self.len() {
            if states[i].is_some() {
                if let Some(&p) = self.parents[i].iter().find(|&&p| states[p].is_none()) {
                    return Err(Error::NotAncestrallyClosed {
                        case: case_index,
                        variable: self.name(i).to_string(),
                        parent: self.name(p).to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
