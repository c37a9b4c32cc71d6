use super::Expr;

impl Expr {
    /// Exact partial derivative with respect to the variable `name`.
    /// Constants and parameters differentiate to zero.
    pub fn diff(&self, name: &str) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::zero(),
            Expr::Var(n) => {
                if n == name {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => Expr::add(a.diff(name), b.diff(name)),
            Expr::Sub(a, b) => Expr::sub(a.diff(name), b.diff(name)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(name), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(name)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(name);
                let db = b.diff(name);
                if db.is_zero() {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(
                            Expr::mul(da, (**b).clone()),
                            Expr::mul((**a).clone(), db),
                        ),
                        Expr::pow((**b).clone(), 2.0),
                    )
                }
            }
            Expr::Pow(a, p) => Expr::mul(
                Expr::mul(Expr::Const(*p), Expr::pow((**a).clone(), p - 1.0)),
                a.diff(name),
            ),
            Expr::Neg(a) => Expr::neg(a.diff(name)),
            Expr::Log(a) => Expr::div(a.diff(name), (**a).clone()),
            Expr::Exp(a) => Expr::mul(self.clone(), a.diff(name)),
        }
    }
}
