use super::{BinaryOp, EvalError, Expr, UnaryOp};

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    Load(usize),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

/// Postfix program for fast repeated evaluation of an [`Expr`].
///
/// Variables are resolved to argument slots once, at compile time; the
/// quadrature inner loops call [`CompiledExpr::eval`] millions of times.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    max_stack: usize,
    arity: usize,
}

const INLINE_STACK: usize = 32;

impl CompiledExpr {
    pub fn new(expr: &Expr, vars: &[&str]) -> Result<Self, EvalError> {
        let mut code = Vec::with_capacity(expr.node_count());
        emit(expr, vars, &mut code)?;
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for instr in &code {
            match instr {
                Instr::Const(_) | Instr::Load(_) => depth += 1,
                Instr::Unary(_) => {}
                Instr::Binary(_) => depth -= 1,
            }
            max_stack = max_stack.max(depth);
        }
        Ok(CompiledExpr {
            code,
            max_stack,
            arity: vars.len(),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluate with `args[i]` bound to the i-th compile-time variable.
    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(args.len(), self.arity);
        if self.max_stack <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(args, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.max_stack];
            self.run(args, &mut stack)
        }
    }

    #[inline]
    pub fn eval1(&self, x: f64) -> Result<f64, EvalError> {
        self.eval(&[x])
    }

    fn run(&self, args: &[f64], stack: &mut [f64]) -> Result<f64, EvalError> {
        let mut sp = 0usize;
        for instr in &self.code {
            match *instr {
                Instr::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Instr::Load(slot) => {
                    stack[sp] = args[slot];
                    sp += 1;
                }
                Instr::Unary(op) => {
                    stack[sp - 1] = op.apply(stack[sp - 1])?;
                }
                Instr::Binary(op) => {
                    sp -= 1;
                    stack[sp - 1] = op.apply(stack[sp - 1], stack[sp])?;
                }
            }
        }
        Ok(stack[0])
    }
}

fn emit(expr: &Expr, vars: &[&str], code: &mut Vec<Instr>) -> Result<(), EvalError> {
    match expr {
        Expr::Const(v) => code.push(Instr::Const(*v)),
        Expr::Var(name) => {
            let slot = vars
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?;
            code.push(Instr::Load(slot));
        }
        Expr::Unary(op, a) => {
            emit(a, vars, code)?;
            code.push(Instr::Unary(*op));
        }
        Expr::Binary(op, a, b) => {
            emit(a, vars, code)?;
            emit(b, vars, code)?;
            code.push(Instr::Binary(*op));
        }
    }
    Ok(())
}
