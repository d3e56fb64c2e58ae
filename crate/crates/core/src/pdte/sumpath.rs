use super::model::{DecisionTreeModel, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Depth-first path-cost accumulation.
///
/// `node` is called once per decision node and returns that node's comparison data; `edge`
/// extends a parent's cost along one side; `leaf` receives the finished cost of each leaf in
/// canonical order. Only one root-to-leaf path of costs is alive at a time.
pub fn sumpath<S, C, E>(
    m: &DecisionTreeModel,
    root: S,
    mut node: impl FnMut(usize) -> Result<C, E>,
    mut edge: impl FnMut(&S, &C, Side) -> Result<S, E>,
    mut leaf: impl FnMut(usize, S) -> Result<(), E>,
) -> Result<(), E> {
    let mut stack = vec![(m.root, root)];
    let mut leaf_index = 0;
    while let Some((i, cost)) = stack.pop() {
        match m.nodes[i] {
            Node::Leaf { .. } => {
                leaf(leaf_index, cost)?;
                leaf_index += 1;
            }
            Node::Decision { left, right, .. } => {
                let c = node(i)?;
                let r = edge(&cost, &c, Side::Right)?;
                let l = edge(&cost, &c, Side::Left)?;
                stack.push((right, r));
                stack.push((left, l));
            }
        }
    }
    Ok(())
}

/// Cleartext path costs: the left edge of a node costs `I[x > t]`, the right edge `I[x <= t]`.
pub fn sumpath_clear(m: &DecisionTreeModel, x: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let _ = sumpath::<u64, u64, ()>(
        m,
        0,
        |i| match m.nodes[i] {
            Node::Decision { attr, threshold, .. } => Ok(u64::from(x[attr] > threshold)),
            Node::Leaf { .. } => unreachable!(),
        },
        |s, &c, side| Ok(s + if side == Side::Left { c } else { 1 - c }),
        |_, s| {
            out.push(s);
            Ok(())
        },
    );
    out
}
