//! Small graph helpers: strongly connected components and final (sink) classes.

/// Tarjan's algorithm. Components are returned in reverse topological order
/// (every component is emitted before any of its predecessors), each sorted
/// by node index.
pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        lowlink: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next_index: usize,
        components: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State, v: usize) {
        s.index[v] = Some(s.next_index);
        s.lowlink[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for idx in 0..s.adj[v].len() {
            let w = s.adj[v][idx];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.lowlink[v] = s.lowlink[v].min(s.lowlink[w]);
                }
                Some(wi) if s.on_stack[w] => {
                    s.lowlink[v] = s.lowlink[v].min(wi);
                }
                _ => {}
            }
        }
        if s.lowlink[v] == s.index[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().unwrap();
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.components.push(comp);
        }
    }

    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        lowlink: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next_index: 0,
        components: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.components
}

/// Strongly connected components with no arc leaving them, sorted by their
/// smallest node. The remaining nodes are returned as the transient set.
pub fn final_classes(adj: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let comps = tarjan_scc(adj);
    let n = adj.len();
    let mut comp_of = vec![0usize; n];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let mut finals = Vec::new();
    let mut transient = Vec::new();
    for (c, comp) in comps.iter().enumerate() {
        let closed = comp
            .iter()
            .all(|&v| adj[v].iter().all(|&w| comp_of[w] == c));
        if closed {
            finals.push(comp.clone());
        } else {
            transient.extend(comp.iter().copied());
        }
    }
    finals.sort_by_key(|c| c[0]);
    transient.sort_unstable();
    (finals, transient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_of_two_cycles() {
        // 0 <-> 1, 2 -> 2, 1 -> 2
        let adj = vec![vec![1], vec![0, 2], vec![2]];
        let comps = tarjan_scc(&adj);
        assert_eq!(comps.len(), 2);
        let (finals, transient) = final_classes(&adj);
        assert_eq!(finals, vec![vec![2]]);
        assert_eq!(transient, vec![0, 1]);
    }

    #[test]
    fn isolated_self_loops_are_final() {
        let adj = vec![vec![0], vec![1]];
        let (finals, transient) = final_classes(&adj);
        assert_eq!(finals, vec![vec![0], vec![1]]);
        assert!(transient.is_empty());
    }
}
