use super::{BinaryOp, Expr, UnaryOp};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

pub(super) fn derivative(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Const(_) => c(0.0),
        Expr::Var(name) => c(if name == var { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = derivative(a, var);
            let a = (**a).clone();
            let outer = match op {
                UnaryOp::Neg => return da.neg(),
                UnaryOp::Sin => a.apply(UnaryOp::Cos),
                UnaryOp::Cos => a.apply(UnaryOp::Sin).neg(),
                UnaryOp::Tan => c(1.0).div(a.apply(UnaryOp::Cos).pow(c(2.0))),
                UnaryOp::Exp => a.apply(UnaryOp::Exp),
                UnaryOp::Ln => return da.div(a),
                UnaryOp::Sqrt => return da.div(c(2.0).mul(a.apply(UnaryOp::Sqrt))),
                UnaryOp::Abs => a.clone().div(a.apply(UnaryOp::Abs)),
            };
            outer.mul(da)
        }
        Expr::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => da.add(db),
                BinaryOp::Sub => da.sub(db),
                BinaryOp::Mul => da.mul(b).add(a.mul(db)),
                BinaryOp::Div => {
                    if !b.contains_var(var) {
                        da.div(b)
                    } else {
                        da.mul(b.clone()).sub(a.mul(db)).div(b.pow(c(2.0)))
                    }
                }
                BinaryOp::Pow => {
                    if !b.contains_var(var) {
                        b.clone().mul(a.pow(b.sub(c(1.0)))).mul(da)
                    } else if !a.contains_var(var) {
                        a.clone().pow(b).mul(a.apply(UnaryOp::Ln)).mul(db)
                    } else {
                        let ln_a = a.clone().apply(UnaryOp::Ln);
                        a.clone().pow(b.clone()).mul(db.mul(ln_a).add(b.mul(da).div(a)))
                    }
                }
            }
        }
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(x) if *x == v)
}

fn fold(op: BinaryOp, x: f64, y: f64) -> Option<f64> {
    let r = op.apply(x, y).ok()?;
    match op {
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => Some(r),
        // keep `1/3`, `2^0.5` symbolic unless exact
        BinaryOp::Div | BinaryOp::Pow => (r.fract() == 0.0).then_some(r),
    }
}

pub(super) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Unary(op, a) => {
            let a = simplify(a);
            match (op, a) {
                (UnaryOp::Neg, Expr::Const(v)) => c(-v),
                (UnaryOp::Neg, Expr::Unary(UnaryOp::Neg, inner)) => *inner,
                (op, a) => Expr::unary(*op, a),
            }
        }
        Expr::Binary(op, a, b) => {
            let a = simplify(a);
            let b = simplify(b);
            if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
                if let Some(r) = fold(*op, *x, *y) {
                    return c(r);
                }
            }
            match op {
                BinaryOp::Add if is_const(&a, 0.0) => b,
                BinaryOp::Add | BinaryOp::Sub if is_const(&b, 0.0) => a,
                BinaryOp::Add => match b {
                    Expr::Unary(UnaryOp::Neg, inner) => a.sub(*inner),
                    b => a.add(b),
                },
                BinaryOp::Sub if is_const(&a, 0.0) => simplify(&b.neg()),
                BinaryOp::Sub => match b {
                    Expr::Unary(UnaryOp::Neg, inner) => a.add(*inner),
                    b => a.sub(b),
                },
                BinaryOp::Mul if is_const(&a, 0.0) || is_const(&b, 0.0) => c(0.0),
                BinaryOp::Mul if is_const(&a, 1.0) => b,
                BinaryOp::Mul if is_const(&b, 1.0) => a,
                BinaryOp::Mul if is_const(&a, -1.0) => simplify(&b.neg()),
                BinaryOp::Mul if is_const(&b, -1.0) => simplify(&a.neg()),
                BinaryOp::Mul => match (a, b) {
                    (a, Expr::Binary(BinaryOp::Div, num, den)) if is_const(&num, 1.0) => a.div(*den),
                    (Expr::Binary(BinaryOp::Div, num, den), b) if is_const(&num, 1.0) => b.div(*den),
                    (a, b) => a.mul(b),
                },
                BinaryOp::Div if is_const(&a, 0.0) => c(0.0),
                BinaryOp::Div if is_const(&b, 1.0) => a,
                BinaryOp::Div => a.div(b),
                BinaryOp::Pow if is_const(&b, 1.0) => a,
                BinaryOp::Pow if is_const(&b, 0.0) => c(1.0),
                BinaryOp::Pow => a.pow(b),
            }
        }
    }
}
