// Sparse polynomials: parsing, arithmetic, calculus and monomial bases.

use polyopt::polyring::{motzkin, parse_polynomial, MonomialBasis};
use polyopt::Result;

pub fn run_example() -> Result<()> {
    let p = parse_polynomial("x1 + 1", 1)?;
    let q = parse_polynomial("x1 - 1", 1)?;
    let prod = &p * &q;
    println!("({p}) * ({q}) = {prod}");
    assert_eq!(prod, parse_polynomial("x1^2 - 1", 1)?);

    let m = motzkin();
    println!("motzkin = {m}, degree {:?}", m.degree());
    println!("m(1, 1, 1) = {}", m.eval(&[1.0, 1.0, 1.0]));
    let t = (1.0f64 / 3.0).sqrt();
    println!("m(t, t, t) = {:e}  (t = 1/sqrt(3))", m.eval(&[t, t, t]));
    println!("deg(m * m) = {:?}", (&m * &m).degree());

    let grad = m.gradient();
    for (i, g) in grad.iter().enumerate() {
        println!("dm/dx{} = {g}", i + 1);
    }
    let hess = parse_polynomial("x1 * x2", 2)?.hessian();
    println!("hessian of x1 x2 = [[{}, {}], [{}, {}]]", hess[0][0], hess[0][1], hess[1][0], hess[1][1]);

    let basis = MonomialBasis::new(2, 2);
    let names: Vec<String> = basis.entries().iter().map(|b| b.to_string()).collect();
    println!("basis(n = 2, d = 2) = [{}]", names.join(", "));
    assert_eq!(MonomialBasis::new(3, 3).len(), 20);

    let json = serde_json::to_string(&m)?;
    println!("as JSON: {json}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
