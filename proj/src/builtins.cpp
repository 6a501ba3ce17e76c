#include "branchtrace/builtins.hpp"

#include "branchtrace/errors.hpp"

namespace branchtrace::builtins {

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }
Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

DomainSpec open_domain(double base_lambda, double lambda_min, double lambda_max, double norm_cap) {
    DomainSpec d;
    d.base_lambda = base_lambda;
    d.lambda_min = lambda_min;
    d.lambda_max = lambda_max;
    d.norm_cap = norm_cap;
    return d;
}

} // namespace

ParameterizedSystem circle() {
    ParameterizedSystem s;
    s.name = "circle";
    s.n_state = 1;
    s.residual = [](double l, const Vector& u) { return scalar(u(0) * u(0) + l * l - 1.0); };
    s.jac_u = [](double, const Vector& u) { return scalar_matrix(2.0 * u(0)); };
    s.jac_lambda = [](double l, const Vector&) { return scalar(2.0 * l); };
    s.domain = open_domain(0.0, -2.0, 2.0, 1e3);
    return s;
}

ParameterizedSystem fold() {
    ParameterizedSystem s;
    s.name = "fold";
    s.n_state = 1;
    s.residual = [](double l, const Vector& u) { return scalar(u(0) * u(0) - l); };
    s.jac_u = [](double, const Vector& u) { return scalar_matrix(2.0 * u(0)); };
    s.jac_lambda = [](double, const Vector&) { return scalar(-1.0); };
    s.domain = open_domain(1.0, -2.0, 3.0, 1e3);
    return s;
}

ParameterizedSystem pitchfork() {
    ParameterizedSystem s;
    s.name = "pitchfork";
    s.n_state = 1;
    s.residual = [](double l, const Vector& u) { return scalar(l * u(0) - u(0) * u(0) * u(0)); };
    s.jac_u = [](double l, const Vector& u) { return scalar_matrix(l - 3.0 * u(0) * u(0)); };
    s.jac_lambda = [](double, const Vector& u) { return scalar(u(0)); };
    s.domain = open_domain(-0.5, -1.0, 1.0, 1e3);
    return s;
}

ParameterizedSystem line() {
    ParameterizedSystem s;
    s.name = "line";
    s.n_state = 1;
    s.residual = [](double l, const Vector& u) { return scalar(u(0) - l); };
    s.jac_u = [](double, const Vector&) { return scalar_matrix(1.0); };
    s.jac_lambda = [](double, const Vector&) { return scalar(-1.0); };
    s.domain = open_domain(0.0, 0.0, 10.0, 5.0);
    return s;
}

ParameterizedSystem linear(const Matrix& a, const Vector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw Error(ErrorKind::Shape, "linear builtin: A must be square and match b");
    ParameterizedSystem s;
    s.name = "linear";
    s.n_state = a.rows();
    s.residual = [a, b](double l, const Vector& u) -> Vector { return a * u - l * b; };
    s.jac_u = [a](double, const Vector&) -> Matrix { return a; };
    s.jac_lambda = [b](double, const Vector&) -> Vector { return -b; };
    s.domain = open_domain(0.0, -1e3, 1e3, 1e6);
    return s;
}

ParameterizedSystem embedded_fold() {
    ParameterizedSystem s;
    s.name = "embedded_fold";
    s.n_state = 2;
    s.residual = [](double l, const Vector& x) {
        Vector r(2);
        r << x(0) * x(0) - l, x(1);
        return r;
    };
    s.jac_u = [](double, const Vector& x) {
        Matrix j(2, 2);
        j << 2.0 * x(0), 0.0, 0.0, 1.0;
        return j;
    };
    s.jac_lambda = [](double, const Vector&) {
        Vector r(2);
        r << -1.0, 0.0;
        return r;
    };
    s.domain = open_domain(1.0, -2.0, 3.0, 1e3);
    return s;
}

ParameterizedSystem coupled_fold() {
    ParameterizedSystem s;
    s.name = "coupled_fold";
    s.n_state = 2;
    s.residual = [](double l, const Vector& x) {
        Vector r(2);
        r << x(0) * x(0) + x(1) * x(1) - l, x(1) - x(0) * x(0);
        return r;
    };
    s.jac_u = [](double, const Vector& x) {
        Matrix j(2, 2);
        j << 2.0 * x(0), 2.0 * x(1), -2.0 * x(0), 1.0;
        return j;
    };
    s.jac_lambda = [](double, const Vector&) {
        Vector r(2);
        r << -1.0, 0.0;
        return r;
    };
    s.domain = open_domain(1.0, -2.0, 3.0, 1e3);
    return s;
}

std::vector<std::string> names() { return {"circle", "fold", "line", "pitchfork"}; }

BuiltinCase make(const std::string& name) {
    if (name == "circle") return {name, circle(), Point{0.0, scalar(1.0)}};
    if (name == "fold") return {name, fold(), Point{1.0, scalar(1.0)}};
    if (name == "pitchfork") return {name, pitchfork(), Point{-0.5, scalar(0.0)}};
    if (name == "line") return {name, line(), Point{0.0, scalar(0.0)}};
    throw Error(ErrorKind::Config, "unknown builtin system '" + name + "'");
}

} // namespace branchtrace::builtins
