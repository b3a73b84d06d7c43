#include "crcm/poly.hpp"

namespace crcm {

ConjPoly ConjPoly::constant(Cplx c) {
    ConjPoly p;
    p.add_term({0, 0, 0, 0, 0, 0}, c);
    return p;
}

ConjPoly ConjPoly::var(PolyVar v) {
    ConjPoly p;
    Exp e{};
    e[v] = 1;
    p.add_term(e, 1.0);
    return p;
}

ConjPoly& ConjPoly::add_term(const Exp& e, Cplx coeff) {
    terms_[e] += coeff;
    prune();
    return *this;
}

void ConjPoly::prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
        it = (std::abs(it->second) == 0.0) ? terms_.erase(it) : std::next(it);
}

ConjPoly ConjPoly::operator+(const ConjPoly& o) const {
    ConjPoly p = *this;
    for (const auto& [e, c] : o.terms_) p.terms_[e] += c;
    p.prune();
    return p;
}

ConjPoly ConjPoly::operator-(const ConjPoly& o) const { return *this + o * Cplx(-1); }

ConjPoly ConjPoly::operator*(const ConjPoly& o) const {
    ConjPoly p;
    for (const auto& [ea, ca] : terms_)
        for (const auto& [eb, cb] : o.terms_) {
            Exp e;
            for (int k = 0; k < 6; ++k) e[k] = ea[k] + eb[k];
            p.terms_[e] += ca * cb;
        }
    p.prune();
    return p;
}

ConjPoly ConjPoly::operator*(Cplx s) const {
    ConjPoly p;
    for (const auto& [e, c] : terms_) p.terms_[e] = c * s;
    p.prune();
    return p;
}

ConjPoly ConjPoly::diff(PolyVar v) const {
    ConjPoly p;
    for (const auto& [e, c] : terms_) {
        if (e[v] == 0) continue;
        Exp d = e;
        d[v] -= 1;
        p.terms_[d] += c * double(e[v]);
    }
    p.prune();
    return p;
}

Cplx ConjPoly::eval_raw(const std::array<Cplx, 6>& vals) const {
    Cplx s = 0;
    for (const auto& [e, c] : terms_) {
        Cplx t = c;
        for (int k = 0; k < 6; ++k)
            for (int j = 0; j < e[k]; ++j) t *= vals[k];
        s += t;
    }
    return s;
}

Cplx ConjPoly::eval(const PolyPoint& p) const {
    const auto vals = p.values();
    check_conjugate_consistent(vals);
    return eval_raw(vals);
}

ConjPoly ConjPoly::conj_mirror() const {
    ConjPoly p;
    for (const auto& [e, c] : terms_) {
        Exp m = {e[Z1B], e[Z1], e[Z2B], e[Z2], e[U1], e[U2]};
        p.terms_[m] += std::conj(c);
    }
    p.prune();
    return p;
}

bool ConjPoly::is_real_valued(double tol) const {
    const ConjPoly d = *this - conj_mirror();
    for (const auto& [e, c] : d.terms())
        if (std::abs(c) > tol) return false;
    return true;
}

void check_conjugate_consistent(const std::array<Cplx, 6>& vals, double tol) {
    if (std::abs(vals[Z1B] - std::conj(vals[Z1])) > tol ||
        std::abs(vals[Z2B] - std::conj(vals[Z2])) > tol ||
        std::abs(vals[U1].imag()) > tol || std::abs(vals[U2].imag()) > tol)
        throw ConjugateMismatch("zbar slots must be conjugates of z slots");
}

} // namespace crcm
