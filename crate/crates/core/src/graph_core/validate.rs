use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::{EdgeRule, GraphKind, MultiPointGraph};

/// Half-width of the index window used to certify connectedness.
const CONNECTIVITY_HALF_WIDTH: i64 = 3;

#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub graph: String,
    pub declared_kind: GraphKind,
    pub kind: GraphKind,
    pub kind_note: Option<String>,
    pub checks: Vec<InvariantCheck>,
    pub valid: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<&InvariantCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> InvariantCheck {
    InvariantCheck { name: name.to_string(), pass, detail: detail.into() }
}

/// Checks the structural invariants of a periodic graph and confirms or downgrades its kind tag.
pub fn validate(graph: &MultiPointGraph) -> ValidationReport {
    let mut checks = Vec::new();
    let d = graph.dim();
    let s = graph.num_classes();

    checks.push(check("basis_nonsingular", true, format!("det = {:.6e}", graph.basis().determinant())));

    // Offsets must be pairwise distinct modulo the lattice.
    let mut clash = None;
    for i in 0..s {
        for j in (i + 1)..s {
            let diff: Vec<f64> = graph.points()[i].iter().zip(&graph.points()[j]).map(|(a, b)| a - b).collect();
            if graph.basis().integer_coords(&diff).is_some() {
                clash = Some((i, j));
            }
        }
    }
    checks.push(match clash {
        Some((i, j)) => check(
            "offsets_distinct",
            false,
            format!("offsets differ by a lattice vector (classes {} and {})", i + 1, j + 1),
        ),
        None => check("offsets_distinct", true, "no two offsets differ by a lattice vector"),
    });

    let zero_edge = graph
        .rules()
        .iter()
        .any(|r| graph.displacement(r).iter().all(|x| x.abs() < 1e-12));
    checks.push(check(
        "no_loops",
        !zero_edge && !graph.rules().is_empty(),
        if graph.rules().is_empty() { "graph has no edges" } else if zero_edge { "an edge rule maps a vertex to itself" } else { "all edges join distinct vertices" },
    ));

    let set: BTreeSet<&EdgeRule> = graph.rules().iter().collect();
    let missing: Vec<String> = graph
        .rules()
        .iter()
        .filter(|r| !set.contains(&r.reversed()))
        .map(|r| format!("({}->{} {:?})", r.from + 1, r.to + 1, r.shift))
        .collect();
    checks.push(check(
        "symmetric",
        missing.is_empty(),
        if missing.is_empty() { "every rule has its reverse".to_string() } else { format!("rules without reverse: {}", missing.join(", ")) },
    ));

    let connected = is_connected(graph);
    checks.push(check(
        "connected",
        connected,
        if connected {
            format!("connected on the index window [-{h},{h}]^{d}", h = CONNECTIVITY_HALF_WIDTH)
        } else {
            "not connected".to_string()
        },
    ));

    checks.push(check(
        "metric",
        graph.metric().is_some(),
        match graph.metric() {
            Some(m) if m.condition > 1e8 => format!("Gram condition number {:.3e} exceeds 1e8", m.condition),
            Some(m) => format!("Gram condition number {:.3e}", m.condition),
            None => "edge vectors do not span".to_string(),
        },
    ));

    let structural_ok = checks.iter().all(|c| c.pass);
    let declared = graph.kind();
    let hex_ok = is_hexagonal_type(graph);
    let star_ok = is_star(graph);
    let (kind, kind_note) = match declared {
        GraphKind::HexagonalType if hex_ok => (GraphKind::HexagonalType, None),
        GraphKind::HexagonalType => (
            GraphKind::General,
            Some("downgraded: needs two classes with every edge joining class 1 to class 2".to_string()),
        ),
        GraphKind::Star if star_ok => (GraphKind::Star, None),
        GraphKind::Star => (
            GraphKind::General,
            Some("downgraded: a satellite class has a neighbor outside class 1".to_string()),
        ),
        GraphKind::General if hex_ok || star_ok => (GraphKind::General, None),
        GraphKind::General if s > 1 => (GraphKind::General, Some("neither hexagonal_type nor star".to_string())),
        GraphKind::General => (GraphKind::General, None),
    };
    checks.push(check(
        "kind",
        kind == declared,
        match &kind_note {
            Some(n) => n.clone(),
            None => format!("kind {kind} confirmed"),
        },
    ));
    ValidationReport {
        graph: graph.name.clone(),
        declared_kind: declared,
        kind,
        kind_note,
        valid: structural_ok,
        checks,
    }
}

pub(crate) fn is_hexagonal_type(graph: &MultiPointGraph) -> bool {
    graph.num_classes() == 2 && !graph.rules().is_empty() && graph.rules().iter().all(|r| r.from != r.to)
}

pub(crate) fn is_star(graph: &MultiPointGraph) -> bool {
    graph.num_classes() >= 2
        && graph.rules().iter().all(|r| r.from == 0 || r.to == 0)
        && (1..graph.num_classes()).all(|c| graph.degree(c) > 0)
}

/// Breadth-first search over lattice indices in `[-3,3]^d` times classes.
fn is_connected(graph: &MultiPointGraph) -> bool {
    let d = graph.dim();
    let s = graph.num_classes();
    let w = CONNECTIVITY_HALF_WIDTH;
    let side = (2 * w + 1) as usize;
    let total = side.pow(d as u32) * s;
    let encode = |n: &[i64], c: usize| -> Option<usize> {
        let mut idx = 0usize;
        for &x in n {
            if x.abs() > w {
                return None;
            }
            idx = idx * side + (x + w) as usize;
        }
        Some(idx * s + c)
    };
    let mut seen = vec![false; total];
    let mut queue = VecDeque::new();
    let origin = vec![0i64; d];
    let start = encode(&origin, 0).expect("origin is inside the window");
    seen[start] = true;
    queue.push_back((origin, 0usize));
    let mut reached = 1usize;
    while let Some((n, c)) = queue.pop_front() {
        for r in graph.rules().iter().filter(|r| r.from == c) {
            let m: Vec<i64> = n.iter().zip(&r.shift).map(|(a, b)| a + b).collect();
            if let Some(idx) = encode(&m, r.to) {
                if !seen[idx] {
                    seen[idx] = true;
                    reached += 1;
                    queue.push_back((m, r.to));
                }
            }
        }
    }
    reached == total
}
