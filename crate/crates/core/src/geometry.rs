//! Accessibility graph construction from a layout map.
//!
//! A layout is a set of points of interest (POIs, typically sensor
//! locations) and a set of obstacle segments (walls). The accessibility
//! graph starts as the complete graph over the POIs and drops every edge
//! whose straight path collides with an obstacle. Surviving edges carry
//! their Euclidean length.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the layout's coordinate system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidLayout(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        Ok(Point(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point(vec![x, y])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A straight obstacle or path between two distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    a: Point,
    b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        if a == b {
            return Err(Error::InvalidLayout(format!(
                "zero-length segment at {:?}",
                a.coords()
            )));
        }
        Ok(Segment { a, b })
    }

    pub fn a(&self) -> &Point {
        &self.a
    }

    pub fn b(&self) -> &Point {
        &self.b
    }

    pub fn reversed(&self) -> Segment {
        Segment {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

/// Planar cross product of `(p - origin) x (q - origin)`.
fn cross(p: &Point, q: &Point, origin: &Point) -> f64 {
    let (px, py) = (p.0[0] - origin.0[0], p.0[1] - origin.0[1]);
    let (qx, qy) = (q.0[0] - origin.0[0], q.0[1] - origin.0[1]);
    px * qy - py * qx
}

/// Bounding-box containment of `p` in `l`, over every coordinate.
///
/// Only meaningful when `p` is already known to be collinear with `l`.
pub fn on_segment(l: &Segment, p: &Point) -> bool {
    l.a.0
        .iter()
        .zip(&l.b.0)
        .zip(&p.0)
        .all(|((a, b), v)| a.min(*b) <= *v && *v <= a.max(*b))
}

/// Whether two segments share at least one point.
///
/// Touching at an endpoint and collinear overlap both count as a collision.
pub fn segments_intersect(l1: &Segment, l2: &Segment) -> Result<bool> {
    if l1.a.dim() != l2.a.dim() {
        return Err(Error::DimensionMismatch {
            expected: l1.a.dim(),
            got: l2.a.dim(),
        });
    }
    let (c1, c2) = (&l1.a, &l1.b);
    let (c3, c4) = (&l2.a, &l2.b);
    let v1 = cross(c1, c4, c3);
    let v2 = cross(c2, c4, c3);
    let v3 = cross(c3, c2, c1);
    let v4 = cross(c4, c2, c1);

    Ok((v1 * v2 < 0.0 && v3 * v4 < 0.0)
        || (v1 == 0.0 && on_segment(l2, c1))
        || (v2 == 0.0 && on_segment(l2, c2))
        || (v3 == 0.0 && on_segment(l1, c3))
        || (v4 == 0.0 && on_segment(l1, c4)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub id: String,
    pub point: Point,
}

/// POIs and obstacles sharing one coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutMap {
    pois: Vec<Poi>,
    obstacles: Vec<Segment>,
    manual_edges: Vec<(String, String)>,
    rooms: HashMap<String, u32>,
}

impl LayoutMap {
    pub fn new(pois: Vec<Poi>, obstacles: Vec<Segment>) -> Result<Self> {
        if pois.is_empty() {
            return Err(Error::EmptyInput("layout has no POIs"));
        }
        let dim = pois[0].point.dim();
        let mut seen = HashSet::new();
        for poi in &pois {
            if !seen.insert(poi.id.as_str()) {
                return Err(Error::InvalidLayout(format!("duplicate POI id `{}`", poi.id)));
            }
            if poi.point.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: poi.point.dim(),
                });
            }
        }
        for (i, p) in pois.iter().enumerate() {
            if let Some(q) = pois[i + 1..].iter().find(|q| q.point == p.point) {
                return Err(Error::InvalidLayout(format!(
                    "POIs `{}` and `{}` share coordinates {:?}",
                    p.id,
                    q.id,
                    p.point.coords()
                )));
            }
        }
        if let Some(w) = obstacles.iter().find(|w| w.a.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.a.dim(),
            });
        }
        Ok(LayoutMap {
            pois,
            obstacles,
            manual_edges: Vec::new(),
            rooms: HashMap::new(),
        })
    }

    pub fn with_manual_edges(mut self, edges: Vec<(String, String)>) -> Result<Self> {
        for (a, b) in &edges {
            for id in [a, b] {
                if self.index_of(id).is_none() {
                    return Err(Error::UnknownNode(id.clone()));
                }
            }
        }
        self.manual_edges = edges;
        Ok(self)
    }

    pub fn with_rooms(mut self, rooms: HashMap<String, u32>) -> Self {
        self.rooms = rooms;
        self
    }

    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }

    pub fn obstacles(&self) -> &[Segment] {
        &self.obstacles
    }

    pub fn manual_edges(&self) -> &[(String, String)] {
        &self.manual_edges
    }

    /// Room index per POI id, when the layout declares rooms.
    pub fn rooms(&self) -> &HashMap<String, u32> {
        &self.rooms
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.pois.iter().position(|p| p.id == id)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: LayoutFile = toml::from_str(text)?;
        file.try_into()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = LayoutFile::from(self);
        toml::to_string(&file).expect("layout serializes")
    }
}

/// On-disk layout document.
///
/// ```toml
/// [[pois]]
/// id = "M1"
/// x = 0.0
/// y = 0.0
/// room = 1          # optional
///
/// [[obstacles]]
/// x1 = 4.0
/// y1 = 5.0
/// x2 = 6.0
/// y2 = 5.0
///
/// [[manual_edges]]  # optional
/// a = "M1"
/// b = "M3"
/// ```
#[derive(Debug, Serialize, Deserialize)]
struct LayoutFile {
    pois: Vec<PoiRow>,
    #[serde(default)]
    obstacles: Vec<ObstacleRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    manual_edges: Vec<EdgeRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoiRow {
    id: String,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    room: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObstacleRow {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    a: String,
    b: String,
}

impl TryFrom<LayoutFile> for LayoutMap {
    type Error = Error;

    fn try_from(file: LayoutFile) -> Result<Self> {
        let mut rooms = HashMap::new();
        let mut pois = Vec::with_capacity(file.pois.len());
        for row in file.pois {
            if let Some(room) = row.room {
                rooms.insert(row.id.clone(), room);
            }
            pois.push(Poi {
                point: Point::new(vec![row.x, row.y])?,
                id: row.id,
            });
        }
        let obstacles = file
            .obstacles
            .into_iter()
            .map(|o| {
                Segment::new(
                    Point::new(vec![o.x1, o.y1])?,
                    Point::new(vec![o.x2, o.y2])?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = file.manual_edges.into_iter().map(|e| (e.a, e.b)).collect();
        Ok(LayoutMap::new(pois, obstacles)?
            .with_manual_edges(edges)?
            .with_rooms(rooms))
    }
}

impl From<&LayoutMap> for LayoutFile {
    fn from(map: &LayoutMap) -> Self {
        LayoutFile {
            pois: map
                .pois
                .iter()
                .map(|p| PoiRow {
                    id: p.id.clone(),
                    x: p.point.0[0],
                    y: p.point.0[1],
                    room: map.rooms.get(&p.id).copied(),
                })
                .collect(),
            obstacles: map
                .obstacles
                .iter()
                .map(|w| ObstacleRow {
                    x1: w.a.0[0],
                    y1: w.a.0[1],
                    x2: w.b.0[0],
                    y2: w.b.0[1],
                })
                .collect(),
            manual_edges: map
                .manual_edges
                .iter()
                .map(|(a, b)| EdgeRow {
                    a: a.clone(),
                    b: b.clone(),
                })
                .collect(),
        }
    }
}

/// Weighted undirected graph over POIs; `0` marks "no edge".
#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityGraph {
    node_ids: Vec<String>,
    points: Vec<Point>,
    dist: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    pub distance: f64,
}

/// JSON form of an [`AccessibilityGraph`]: `dist` is dense row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphExport {
    pub node_ids: Vec<String>,
    pub dist: Vec<f64>,
    pub edges: Vec<GraphEdge>,
}

impl AccessibilityGraph {
    /// Graph with no edges over the layout's POIs.
    pub fn empty(map: &LayoutMap) -> Self {
        let n = map.pois.len();
        AccessibilityGraph {
            node_ids: map.pois.iter().map(|p| p.id.clone()).collect(),
            points: map.pois.iter().map(|p| p.point.clone()).collect(),
            dist: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.node_ids
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.dist[i][j] > 0.0
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.dist[i]
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(j, _)| j)
    }

    /// Undirected edges `(i, j, distance)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.dist[i][j] > 0.0 {
                    out.push((i, j, self.dist[i][j]));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Connected components as sorted lists of node indices, ordered by
    /// their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Component listing by node id, for warnings and summaries.
    pub fn component_report(&self) -> Vec<Vec<String>> {
        self.components()
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.node_ids[i].clone()).collect())
            .collect()
    }

    /// Adds an edge weighted by Euclidean distance, ignoring obstacles.
    pub fn manual_edge(mut self, id_a: &str, id_b: &str) -> Result<Self> {
        let i = self.index_of(id_a)?;
        let j = self.index_of(id_b)?;
        if i == j {
            return Err(Error::SelfEdge(id_a.to_string()));
        }
        let d = self.points[i].distance(&self.points[j]);
        self.dist[i][j] = d;
        self.dist[j][i] = d;
        Ok(self)
    }

    /// Shortest path (by distance) from `from` to `to`, inclusive of both.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.len();
        let mut best = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        best[from] = 0.0;
        for _ in 0..n {
            let u = (0..n)
                .filter(|&u| !done[u] && best[u].is_finite())
                .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))?;
            if u == to {
                break;
            }
            done[u] = true;
            for v in self.neighbors(u) {
                let cand = best[u] + self.dist[u][v];
                if cand < best[v] {
                    best[v] = cand;
                    prev[v] = u;
                }
            }
        }
        if !best[to].is_finite() {
            return None;
        }
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path)
    }

    pub fn to_export(&self) -> GraphExport {
        GraphExport {
            node_ids: self.node_ids.clone(),
            dist: self.dist.iter().flatten().copied().collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|(i, j, d)| GraphEdge {
                    a: self.node_ids[i].clone(),
                    b: self.node_ids[j].clone(),
                    distance: d,
                })
                .collect(),
        }
    }

    /// Builds a graph directly from a weighted adjacency matrix.
    ///
    /// Points are not known in this form, so [`manual_edge`](Self::manual_edge)
    /// on the result uses placeholder coordinates; use it for matrices that
    /// did not come from a layout.
    pub fn from_adjacency(node_ids: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = node_ids.len();
        if dist.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dist.len(),
            });
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 || d != dist[j][i] || (i == j && d != 0.0) {
                    return Err(Error::InvalidLayout(format!(
                        "adjacency must be symmetric, nonnegative, zero-diagonal (entry {i},{j} = {d})"
                    )));
                }
            }
        }
        Ok(AccessibilityGraph {
            points: (0..n).map(|i| Point::xy(i as f64, 0.0)).collect(),
            node_ids,
            dist,
        })
    }
}

/// Complete graph over the POIs minus every edge that collides with an
/// obstacle. Manual edges declared in the layout are added afterwards.
///
/// Runs in `O(m n^2)` for `n` POIs and `m` obstacles. A disconnected result
/// is logged as a warning and returned as is.
pub fn complete_graph_prune(map: &LayoutMap) -> Result<AccessibilityGraph> {
    let mut graph = AccessibilityGraph::empty(map);
    let n = graph.len();
    for i in 0..n {
        for j in i + 1..n {
            let edge = Segment::new(graph.points[i].clone(), graph.points[j].clone())?;
            let mut blocked = false;
            for w in &map.obstacles {
                if segments_intersect(&edge, w)? {
                    blocked = true;
                    break;
                }
            }
            if !blocked {
                let d = graph.points[i].distance(&graph.points[j]);
                graph.dist[i][j] = d;
                graph.dist[j][i] = d;
            }
        }
    }
    for (a, b) in &map.manual_edges {
        graph = graph.manual_edge(a, b)?;
    }
    if !graph.is_connected() {
        log::warn!(
            "accessibility graph is disconnected: {:?}",
            graph.component_report()
        );
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: (f64, f64), b: (f64, f64)) -> Segment {
        Segment::new(Point::xy(a.0, a.1), Point::xy(b.0, b.1)).unwrap()
    }

    fn poi(id: &str, x: f64, y: f64) -> Poi {
        Poi {
            id: id.into(),
            point: Point::xy(x, y),
        }
    }

    fn square() -> LayoutMap {
        LayoutMap::new(
            vec![
                poi("M1", 0.0, 0.0),
                poi("M2", 10.0, 0.0),
                poi("M3", 10.0, 10.0),
                poi("M4", 0.0, 10.0),
            ],
            vec![seg((4.0, 5.0), (6.0, 5.0))],
        )
        .unwrap()
    }

    #[test]
    fn crossing_diagonals_intersect() {
        assert!(segments_intersect(&seg((0., 0.), (2., 2.)), &seg((0., 2.), (2., 0.))).unwrap());
    }

    #[test]
    fn collinear_disjoint_do_not_intersect() {
        assert!(!segments_intersect(&seg((0., 0.), (1., 1.)), &seg((2., 2.), (3., 3.))).unwrap());
    }

    #[test]
    fn collinear_overlap_intersects() {
        assert!(segments_intersect(&seg((0., 0.), (4., 0.)), &seg((2., 0.), (6., 0.))).unwrap());
    }

    #[test]
    fn t_junction_intersects() {
        assert!(segments_intersect(&seg((0., 0.), (2., 0.)), &seg((1., 0.), (1., 5.))).unwrap());
    }

    #[test]
    fn parallel_disjoint_do_not_intersect() {
        assert!(!segments_intersect(&seg((0., 0.), (4., 0.)), &seg((0., 1.), (4., 1.))).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let l3 = Segment::new(
            Point::new(vec![0., 0., 0.]).unwrap(),
            Point::new(vec![1., 1., 1.]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            segments_intersect(&seg((0., 0.), (1., 0.)), &l3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn on_segment_bounding_box() {
        let l = seg((0., 0.), (4., 4.));
        assert!(on_segment(&l, &Point::xy(2., 2.)));
        assert!(!on_segment(&l, &Point::xy(5., 5.)));
        assert!(on_segment(&l, &Point::xy(0., 0.)));
    }

    #[test]
    fn zero_length_segment_rejected() {
        assert!(Segment::new(Point::xy(1., 1.), Point::xy(1., 1.)).is_err());
    }

    #[test]
    fn square_prunes_both_diagonals() {
        let g = complete_graph_prune(&square()).unwrap();
        let edges: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.0, e.1)).collect();
        assert_eq!(edges, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(g.dist()[0][1], 10.0);
        assert!(g.is_connected());
    }

    #[test]
    fn far_obstacle_keeps_complete_graph() {
        let map = LayoutMap::new(
            vec![
                poi("a", 0., 0.),
                poi("b", 1., 0.),
                poi("c", 0., 1.),
                poi("d", 1., 1.),
                poi("e", 0.5, 2.),
            ],
            vec![seg((100., 100.), (101., 100.))],
        )
        .unwrap();
        let g = complete_graph_prune(&map).unwrap();
        assert_eq!(g.edge_count(), 5 * 4 / 2);
    }

    #[test]
    fn bisected_pair_is_disconnected() {
        let map = LayoutMap::new(
            vec![poi("a", 0., 0.), poi("b", 2., 0.)],
            vec![seg((1., -1.), (1., 1.))],
        )
        .unwrap();
        let g = complete_graph_prune(&map).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.components().len(), 2);
    }

    #[test]
    fn manual_edge_bridges_obstacle() {
        let g = complete_graph_prune(&square()).unwrap();
        let g = g.manual_edge("M1", "M3").unwrap();
        assert!((g.dist()[0][2] - 200f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.dist()[0][2], g.dist()[2][0]);
        let again = g.clone().manual_edge("M1", "M3").unwrap();
        assert_eq!(again, g);
        assert!(matches!(g.clone().manual_edge("M1", "M1"), Err(Error::SelfEdge(_))));
        assert!(matches!(g.manual_edge("M1", "nope"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn layout_rejects_duplicates() {
        assert!(LayoutMap::new(vec![poi("a", 0., 0.), poi("a", 1., 0.)], vec![]).is_err());
        assert!(LayoutMap::new(vec![poi("a", 0., 0.), poi("b", 0., 0.)], vec![]).is_err());
        assert!(LayoutMap::new(vec![], vec![]).is_err());
    }

    #[test]
    fn layout_toml_round_trip() {
        let text = r#"
            [[pois]]
            id = "M1"
            x = 0.0
            y = 0.0
            room = 2
            [[pois]]
            id = "M2"
            x = 10.0
            y = 0.0
            [[obstacles]]
            x1 = 5.0
            y1 = -1.0
            x2 = 5.0
            y2 = 1.0
            [[manual_edges]]
            a = "M1"
            b = "M2"
        "#;
        let map = LayoutMap::from_toml_str(text).unwrap();
        assert_eq!(map.pois().len(), 2);
        assert_eq!(map.rooms()["M1"], 2);
        let g = complete_graph_prune(&map).unwrap();
        assert_eq!(g.edge_count(), 1);
        let again = LayoutMap::from_toml_str(&map.to_toml_string()).unwrap();
        assert_eq!(again, map);
    }

    #[test]
    fn shortest_path_goes_around() {
        let g = complete_graph_prune(&square()).unwrap();
        let p = g.shortest_path(0, 2).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!((p[0], p[2]), (0, 2));
    }

    #[test]
    fn export_is_row_major() {
        let g = complete_graph_prune(&square()).unwrap();
        let ex = g.to_export();
        assert_eq!(ex.dist.len(), 16);
        assert_eq!(ex.dist[1], 10.0);
        assert_eq!(ex.dist[4], 10.0);
        assert_eq!(ex.edges.len(), 4);
    }
}
