use super::{Branch, SessionType};

pub(super) fn pretty(t: &SessionType) -> String {
    let mut out = String::new();
    term(t, &mut out);
    out
}

fn term(t: &SessionType, out: &mut String) {
    match t {
        SessionType::Success => out.push('1'),
        SessionType::Stuck => out.push('0'),
        SessionType::Var(x) => out.push_str(x),
        SessionType::Internal(bs) => branches(bs, '!', " (+) ", out),
        SessionType::External(bs) => branches(bs, '?', " + ", out),
        SessionType::Rec(x, body) => {
            out.push_str("rec ");
            out.push_str(x);
            out.push_str(" . ");
            term(body, out);
        }
        SessionType::Buffer(a, p) => {
            out.push_str("[!");
            out.push_str(a);
            out.push(']');
            atom(p, out);
        }
    }
}

fn branches(bs: &[Branch], sigil: char, sep: &str, out: &mut String) {
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        out.push(sigil);
        out.push_str(&b.action);
        if b.cont != SessionType::Success {
            out.push('.');
            atom(&b.cont, out);
        }
    }
}

/// A term in continuation position: multi-branch choices and `rec` need
/// parentheses there.
fn atom(t: &SessionType, out: &mut String) {
    let wrap = match t {
        SessionType::Internal(bs) | SessionType::External(bs) => bs.len() > 1,
        SessionType::Rec(..) => true,
        _ => false,
    };
    if wrap {
        out.push('(');
        term(t, out);
        out.push(')');
    } else {
        term(t, out);
    }
}
