//! Parse a velocity component and read off its derivatives at one point.

use control_curvature::expr::Expression;

fn main() {
    let e = Expression::parse("cos(u) / (1 + 2*q1*cos(u) + 2*q2*sin(u))").expect("valid expression");
    println!("f1 = {e}");
    println!("variables: {:?}", e.variables());

    let (q1, q2, u) = (0.1, -0.2, 0.7);
    let j = e.eval_jet(q1, q2, u).expect("regular point");
    println!("at q = ({q1}, {q2}), u = {u}");
    println!("  value     {:+.12}", j.value);
    println!("  d/du      {:+.12}", j.du);
    println!("  d2/du2    {:+.12}", j.duu);
    println!("  d3/du3    {:+.12}", j.duuu);
    println!("  grad_q    {:+.12?}", j.dq());
    println!("  grad_q du {:+.12?}", j.dq_du());

    // Expressions compose with ordinary operators.
    let g = e.clone() * Expression::u().sin() + 1.0;
    println!("g = {g}, g(q, u) = {:.12}", g.eval(q1, q2, u).unwrap());
}
