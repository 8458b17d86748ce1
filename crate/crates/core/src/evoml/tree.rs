use std::fmt;
use std::str::FromStr;

use super::EvomlError;

/// One node of a prefix-encoded expression tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Add,
    Sub,
    Mul,
    Div,
    Log2,
    Sqrt,
    /// Feature by column index.
    Var(usize),
    Const(f64),
}

impl Node {
    pub const FUNCTIONS: [Node; 6] = [Node::Add, Node::Sub, Node::Mul, Node::Div, Node::Log2, Node::Sqrt];

    pub fn arity(&self) -> usize {
        match self {
            Node::Add | Node::Sub | Node::Mul | Node::Div => 2,
            Node::Log2 | Node::Sqrt => 1,
            Node::Var(_) | Node::Const(_) => 0,
        }
    }
}

fn guard(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

/// Expression tree stored in prefix order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates arity: the prefix sequence must describe exactly one tree.
    pub fn new(nodes: Vec<Node>) -> Option<Tree> {
        let mut open = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return None;
            }
            open = open - 1 + n.arity();
            if open == 0 && i + 1 != nodes.len() {
                return None;
            }
        }
        (open == 0).then_some(Tree { nodes })
    }

    pub fn terminal(node: Node) -> Tree {
        debug_assert_eq!(node.arity(), 0);
        Tree { nodes: vec![node] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    /// Depth of the tree; a single terminal has depth 1.
    pub fn depth(&self) -> usize {
        let mut stack: Vec<usize> = Vec::new();
        for n in self.nodes.iter().rev() {
            let d = match n.arity() {
                0 => 1,
                1 => stack.pop().unwrap() + 1,
                _ => stack.pop().unwrap().max(stack.pop().unwrap()) + 1,
            };
            stack.push(d);
        }
        stack.pop().unwrap_or(0)
    }

    /// Depth of every node (root = 1), in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut pending: Vec<usize> = Vec::new();
        let mut out = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            out.push(pending.len() + 1);
            if n.arity() > 0 {
                pending.push(n.arity());
                continue;
            }
            while let Some(top) = pending.last_mut() {
                *top -= 1;
                if *top > 0 {
                    break;
                }
                pending.pop();
            }
        }
        out
    }

    /// Copy with the subtree at `at` replaced by `with`.
    pub fn replace(&self, at: usize, with: &[Node]) -> Tree {
        let end = self.subtree_end(at);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at) + with.len());
        nodes.extend_from_slice(&self.nodes[..at]);
        nodes.extend_from_slice(with);
        nodes.extend_from_slice(&self.nodes[end..]);
        Tree { nodes }
    }

    pub fn uses_var(&self, v: usize) -> bool {
        self.nodes.contains(&Node::Var(v))
    }

    /// Evaluates with protected operators; the result is always finite.
    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for n in self.nodes.iter().rev() {
            let v = match *n {
                Node::Var(i) => row[i],
                Node::Const(c) => c,
                Node::Log2 => {
                    let x = stack.pop().unwrap();
                    if x <= 0.0 {
                        0.0
                    } else {
                        x.log2()
                    }
                }
                Node::Sqrt => stack.pop().unwrap().abs().sqrt(),
                op => {
                    let a = stack.pop().unwrap();
                    let b = stack.pop().unwrap();
                    match op {
                        Node::Add => a + b,
                        Node::Sub => a - b,
                        Node::Mul => a * b,
                        _ => {
                            if b.abs() < 1e-9 {
                                1.0
                            } else {
                                a / b
                            }
                        }
                    }
                }
            };
            stack.push(guard(v));
        }
        stack.pop().unwrap()
    }

    /// Prefix rendering with feature names substituted.
    pub fn render(&self, names: &[String]) -> String {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Var(i) => names.get(*i).cloned().unwrap_or_else(|| format!("v{i}")),
                other => token(other),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn token(n: &Node) -> String {
    match n {
        Node::Add => "+".into(),
        Node::Sub => "-".into(),
        Node::Mul => "*".into(),
        Node::Div => "/".into(),
        Node::Log2 => "log2".into(),
        Node::Sqrt => "sqrt".into(),
        Node::Var(i) => format!("v{i}"),
        Node::Const(c) => format!("{c}"),
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.nodes.iter().map(token).collect();
        f.write_str(&s.join(" "))
    }
}

/// Parses the prefix form produced by `Display`, e.g. `+ v0 0`.
impl FromStr for Tree {
    type Err = EvomlError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nodes = s
            .split_whitespace()
            .map(|t| match t {
                "+" => Ok(Node::Add),
                "-" => Ok(Node::Sub),
                "*" => Ok(Node::Mul),
                "/" => Ok(Node::Div),
                "log2" => Ok(Node::Log2),
                "sqrt" => Ok(Node::Sqrt),
                _ => {
                    if let Some(i) = t.strip_prefix('v').and_then(|r| r.parse().ok()) {
                        Ok(Node::Var(i))
                    } else {
                        t.parse().map(Node::Const).map_err(|_| EvomlError::Parse(format!("bad token `{t}`")))
                    }
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Tree::new(nodes).ok_or_else(|| EvomlError::Parse(format!("arity mismatch in `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_plus_zero() {
        let t: Tree = "+ v0 0".parse().unwrap();
        assert_eq!(t.eval(&[3.5]), 3.5);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn protected_ops() {
        assert_eq!("/ 1 0".parse::<Tree>().unwrap().eval(&[]), 1.0);
        assert_eq!("log2 -4".parse::<Tree>().unwrap().eval(&[]), 0.0);
        assert_eq!("sqrt -4".parse::<Tree>().unwrap().eval(&[]), 2.0);
        assert_eq!("- v0 2".parse::<Tree>().unwrap().eval(&[5.0]), 3.0);
        let huge = "* 1e300 1e300".parse::<Tree>().unwrap().eval(&[]);
        assert!(huge.is_finite());
    }

    #[test]
    fn arity_checked() {
        assert!("+ v0".parse::<Tree>().is_err());
        assert!("v0 v1".parse::<Tree>().is_err());
        assert!("".parse::<Tree>().is_err());
    }

    #[test]
    fn structure() {
        let t: Tree = "+ * v0 v1 sqrt v2".parse().unwrap();
        assert_eq!(t.subtree_end(1), 4);
        assert_eq!(t.subtree_end(4), 6);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.node_depths(), vec![1, 2, 3, 3, 2, 3]);
        let r = t.replace(1, &[Node::Const(2.0)]);
        assert_eq!(r.to_string(), "+ 2 sqrt v2");
        assert_eq!(t.to_string().parse::<Tree>().unwrap(), t);
    }
}
