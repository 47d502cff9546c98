#include "styletuner/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace styletuner::ad {

namespace {

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Node* Graph::make(Tensor value, bool needs_grad) {
    nodes_.emplace_back();
    Node* n = &nodes_.back();
    n->value = std::move(value);
    n->needs_grad = needs_grad;
    return n;
}

void Graph::ensure_grad(Node* n) {
    if (!n->grad_ready) {
        n->grad = Tensor::zeros(n->value.shape);
        n->grad_ready = true;
    }
}

Node* Graph::constant(Tensor value) {
    return make(std::move(value), false);
}

Node* Graph::leaf(Parameter& param) {
    auto it = leaves_.find(&param);
    if (it != leaves_.end()) return it->second;
    Node* n = make(param.value, true);
    n->param = &param;
    leaves_.emplace(&param, n);
    return n;
}

Node* Graph::add(Node* a, Node* b) {
    check(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    Node* n = make(std::move(out), a->needs_grad || b->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, b, n](Graph& g) {
            if (a->needs_grad) {
                g.ensure_grad(a);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    a->grad.data[i] += n->grad.data[i];
            }
            if (b->needs_grad) {
                g.ensure_grad(b);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    b->grad.data[i] += n->grad.data[i];
            }
        };
    }
    return n;
}

Node* Graph::sub(Node* a, Node* b) {
    check(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    Node* n = make(std::move(out), a->needs_grad || b->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, b, n](Graph& g) {
            if (a->needs_grad) {
                g.ensure_grad(a);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    a->grad.data[i] += n->grad.data[i];
            }
            if (b->needs_grad) {
                g.ensure_grad(b);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    b->grad.data[i] -= n->grad.data[i];
            }
        };
    }
    return n;
}

Node* Graph::scale(Node* a, double factor) {
    Tensor out = a->value;
    for (double& v : out.data) v *= factor;
    Node* n = make(std::move(out), a->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, n, factor](Graph& g) {
            if (factor == 0.0) return;  // a zeroed branch contributes nothing
            g.ensure_grad(a);
            for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                a->grad.data[i] += factor * n->grad.data[i];
        };
    }
    return n;
}

Node* Graph::matmul(Node* a, Node* b) {
    check(a->value.rank() == 2 && b->value.rank() == 2, "matmul: rank must be 2");
    check(a->value.dim(1) == b->value.dim(0), "matmul: inner dims differ");
    const int m = a->value.dim(0), k = a->value.dim(1), nn = b->value.dim(1);
    Tensor out({m, nn});
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = a->value(i, p);
            for (int j = 0; j < nn; ++j) out(i, j) += av * b->value(p, j);
        }
    }
    Node* n = make(std::move(out), a->needs_grad || b->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, b, n, m, k, nn](Graph& g) {
            if (a->needs_grad) {
                g.ensure_grad(a);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < nn; ++j) {
                        const double gv = n->grad(i, j);
                        for (int p = 0; p < k; ++p) a->grad(i, p) += gv * b->value(p, j);
                    }
            }
            if (b->needs_grad) {
                g.ensure_grad(b);
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = a->value(i, p);
                        for (int j = 0; j < nn; ++j) b->grad(p, j) += av * n->grad(i, j);
                    }
            }
        };
    }
    return n;
}

Node* Graph::matmul_nt(Node* a, Node* b) {
    check(a->value.rank() == 2 && b->value.rank() == 2, "matmul_nt: rank must be 2");
    check(a->value.dim(1) == b->value.dim(1), "matmul_nt: inner dims differ");
    const int m = a->value.dim(0), k = a->value.dim(1), nn = b->value.dim(0);
    Tensor out({m, nn});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < nn; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a->value(i, p) * b->value(j, p);
            out(i, j) = s;
        }
    Node* n = make(std::move(out), a->needs_grad || b->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, b, n, m, k, nn](Graph& g) {
            if (a->needs_grad) {
                g.ensure_grad(a);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < nn; ++j) {
                        const double gv = n->grad(i, j);
                        for (int p = 0; p < k; ++p) a->grad(i, p) += gv * b->value(j, p);
                    }
            }
            if (b->needs_grad) {
                g.ensure_grad(b);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < nn; ++j) {
                        const double gv = n->grad(i, j);
                        for (int p = 0; p < k; ++p) b->grad(j, p) += gv * a->value(i, p);
                    }
            }
        };
    }
    return n;
}

Node* Graph::row_bias(Node* x, Node* bias) {
    check(x->value.rank() == 2, "row_bias: x must be rank 2");
    check(static_cast<int>(bias->value.numel()) == x->value.dim(1), "row_bias: width mismatch");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out = x->value;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out(i, j) += bias->value.data[static_cast<std::size_t>(j)];
    Node* n = make(std::move(out), x->needs_grad || bias->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, bias, n, r, c](Graph& g) {
            if (x->needs_grad) {
                g.ensure_grad(x);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    x->grad.data[i] += n->grad.data[i];
            }
            if (bias->needs_grad) {
                g.ensure_grad(bias);
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        bias->grad.data[static_cast<std::size_t>(j)] += n->grad(i, j);
            }
        };
    }
    return n;
}

Node* Graph::channel_bias(Node* x, Node* bias) {
    check(x->value.rank() == 3, "channel_bias: x must be rank 3");
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    check(static_cast<int>(bias->value.numel()) == c, "channel_bias: channel mismatch");
    Tensor out = x->value;
    for (int ci = 0; ci < c; ++ci) {
        const double bv = bias->value.data[static_cast<std::size_t>(ci)];
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out(ci, i, j) += bv;
    }
    Node* n = make(std::move(out), x->needs_grad || bias->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, bias, n, c, h, w](Graph& g) {
            if (x->needs_grad) {
                g.ensure_grad(x);
                for (std::size_t i = 0; i < n->grad.data.size(); ++i)
                    x->grad.data[i] += n->grad.data[i];
            }
            if (bias->needs_grad) {
                g.ensure_grad(bias);
                for (int ci = 0; ci < c; ++ci) {
                    double s = 0.0;
                    for (int i = 0; i < h; ++i)
                        for (int j = 0; j < w; ++j) s += n->grad(ci, i, j);
                    bias->grad.data[static_cast<std::size_t>(ci)] += s;
                }
            }
        };
    }
    return n;
}

Node* Graph::gather_rows(Node* table, std::vector<int> rows) {
    check(table->value.rank() == 2, "gather_rows: table must be rank 2");
    const int v = table->value.dim(0), d = table->value.dim(1);
    for (int r : rows) check(r >= 0 && r < v, "gather_rows: row out of range");
    Tensor out({static_cast<int>(rows.size()), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < d; ++j) out(static_cast<int>(i), j) = table->value(rows[i], j);
    Node* n = make(std::move(out), table->needs_grad);
    if (n->needs_grad) {
        n->backward = [table, n, rows = std::move(rows), d](Graph& g) {
            g.ensure_grad(table);
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (int j = 0; j < d; ++j)
                    table->grad(rows[i], j) += n->grad(static_cast<int>(i), j);
        };
    }
    return n;
}

Node* Graph::slice_cols(Node* x, int col_begin, int col_end) {
    check(x->value.rank() == 2, "slice_cols: x must be rank 2");
    check(0 <= col_begin && col_begin < col_end && col_end <= x->value.dim(1),
          "slice_cols: bad range");
    const int r = x->value.dim(0), c = col_end - col_begin;
    Tensor out({r, c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out(i, j) = x->value(i, col_begin + j);
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n, col_begin, r, c](Graph& g) {
            g.ensure_grad(x);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) x->grad(i, col_begin + j) += n->grad(i, j);
        };
    }
    return n;
}

Node* Graph::concat_cols(const std::vector<Node*>& parts) {
    check(!parts.empty(), "concat_cols: no parts");
    const int r = parts[0]->value.dim(0);
    int total = 0;
    bool needs_grad = false;
    for (Node* p : parts) {
        check(p->value.rank() == 2 && p->value.dim(0) == r, "concat_cols: row mismatch");
        total += p->value.dim(1);
        needs_grad = needs_grad || p->needs_grad;
    }
    Tensor out({r, total});
    int off = 0;
    for (Node* p : parts) {
        const int c = p->value.dim(1);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out(i, off + j) = p->value(i, j);
        off += c;
    }
    Node* n = make(std::move(out), needs_grad);
    if (n->needs_grad) {
        n->backward = [parts, n, r](Graph& g) {
            int off2 = 0;
            for (Node* p : parts) {
                const int c = p->value.dim(1);
                if (p->needs_grad) {
                    g.ensure_grad(p);
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < c; ++j) p->grad(i, j) += n->grad(i, off2 + j);
                }
                off2 += c;
            }
        };
    }
    return n;
}

Node* Graph::softmax_rows(Node* x) {
    check(x->value.rank() == 2, "softmax_rows: x must be rank 2");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        double mx = x->value(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, x->value(i, j));
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            out(i, j) = std::exp(x->value(i, j) - mx);
            sum += out(i, j);
        }
        for (int j = 0; j < c; ++j) out(i, j) /= sum;
    }
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n, r, c](Graph& g) {
            g.ensure_grad(x);
            for (int i = 0; i < r; ++i) {
                double dot = 0.0;
                for (int j = 0; j < c; ++j) dot += n->grad(i, j) * n->value(i, j);
                for (int j = 0; j < c; ++j)
                    x->grad(i, j) += n->value(i, j) * (n->grad(i, j) - dot);
            }
        };
    }
    return n;
}

Node* Graph::rmsnorm_rows(Node* x, Node* gain, double eps) {
    check(x->value.rank() == 2, "rmsnorm_rows: x must be rank 2");
    const int r = x->value.dim(0), c = x->value.dim(1);
    check(static_cast<int>(gain->value.numel()) == c, "rmsnorm_rows: gain width mismatch");
    Tensor inv({r});
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        double ms = 0.0;
        for (int j = 0; j < c; ++j) ms += x->value(i, j) * x->value(i, j);
        ms /= c;
        inv(i) = 1.0 / std::sqrt(ms + eps);
        for (int j = 0; j < c; ++j)
            out(i, j) = x->value(i, j) * inv(i) * gain->value.data[static_cast<std::size_t>(j)];
    }
    Node* n = make(std::move(out), x->needs_grad || gain->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, gain, n, inv = std::move(inv), r, c](Graph& g) {
            for (int i = 0; i < r; ++i) {
                const double iv = inv(i);
                if (x->needs_grad) {
                    g.ensure_grad(x);
                    // d/dx[j'] of x[j]*inv*g[j]: diagonal term plus the
                    // coupling through inv = (mean(x^2)+eps)^(-1/2).
                    double coupled = 0.0;
                    for (int j = 0; j < c; ++j)
                        coupled += n->grad(i, j) * gain->value.data[static_cast<std::size_t>(j)] *
                                   x->value(i, j);
                    coupled *= iv * iv * iv / c;
                    for (int j = 0; j < c; ++j) {
                        x->grad(i, j) +=
                            iv * gain->value.data[static_cast<std::size_t>(j)] * n->grad(i, j) -
                            coupled * x->value(i, j);
                    }
                }
                if (gain->needs_grad) {
                    g.ensure_grad(gain);
                    for (int j = 0; j < c; ++j)
                        gain->grad.data[static_cast<std::size_t>(j)] +=
                            n->grad(i, j) * x->value(i, j) * iv;
                }
            }
        };
    }
    return n;
}

Node* Graph::silu(Node* x) {
    Tensor out = x->value;
    for (double& v : out.data) v = v * sigmoid(v);
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n](Graph& g) {
            g.ensure_grad(x);
            for (std::size_t i = 0; i < n->grad.data.size(); ++i) {
                const double v = x->value.data[i];
                const double s = sigmoid(v);
                x->grad.data[i] += n->grad.data[i] * s * (1.0 + v * (1.0 - s));
            }
        };
    }
    return n;
}

Node* Graph::conv2d(Node* x, Node* weight, Node* bias, int stride) {
    check(x->value.rank() == 3, "conv2d: x must be rank 3");
    check(weight->value.rank() == 4, "conv2d: weight must be rank 4");
    check(weight->value.dim(2) == 3 && weight->value.dim(3) == 3, "conv2d: kernel must be 3x3");
    check(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
    const int cin = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    check(weight->value.dim(1) == cin, "conv2d: channel mismatch");
    const int cout = weight->value.dim(0);
    check(static_cast<int>(bias->value.numel()) == cout, "conv2d: bias mismatch");
    const int ho = (h - 1) / stride + 1;
    const int wo = (w - 1) / stride + 1;

    Tensor out({cout, ho, wo});
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double s = bias->value.data[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = oy * stride + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = ox * stride + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            s += x->value(ci, iy, ix) * weight->value(co, ci, ky, kx);
                        }
                    }
                }
                out(co, oy, ox) = s;
            }
        }
    }
    Node* n = make(std::move(out), x->needs_grad || weight->needs_grad || bias->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, weight, bias, n, stride, cin, cout, h, w, ho, wo](Graph& g) {
            if (x->needs_grad) g.ensure_grad(x);
            if (weight->needs_grad) g.ensure_grad(weight);
            if (bias->needs_grad) g.ensure_grad(bias);
            for (int co = 0; co < cout; ++co) {
                for (int oy = 0; oy < ho; ++oy) {
                    for (int ox = 0; ox < wo; ++ox) {
                        const double gv = n->grad(co, oy, ox);
                        if (gv == 0.0) continue;
                        if (bias->needs_grad) bias->grad.data[static_cast<std::size_t>(co)] += gv;
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int ky = 0; ky < 3; ++ky) {
                                const int iy = oy * stride + ky - 1;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < 3; ++kx) {
                                    const int ix = ox * stride + kx - 1;
                                    if (ix < 0 || ix >= w) continue;
                                    if (x->needs_grad)
                                        x->grad(ci, iy, ix) += gv * weight->value(co, ci, ky, kx);
                                    if (weight->needs_grad)
                                        weight->grad(co, ci, ky, kx) += gv * x->value(ci, iy, ix);
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return n;
}

Node* Graph::upsample2x(Node* x) {
    check(x->value.rank() == 3, "upsample2x: x must be rank 3");
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    Tensor out({c, h * 2, w * 2});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double v = x->value(ci, i, j);
                out(ci, 2 * i, 2 * j) = v;
                out(ci, 2 * i, 2 * j + 1) = v;
                out(ci, 2 * i + 1, 2 * j) = v;
                out(ci, 2 * i + 1, 2 * j + 1) = v;
            }
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n, c, h, w](Graph& g) {
            g.ensure_grad(x);
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j)
                        x->grad(ci, i, j) += n->grad(ci, 2 * i, 2 * j) +
                                             n->grad(ci, 2 * i, 2 * j + 1) +
                                             n->grad(ci, 2 * i + 1, 2 * j) +
                                             n->grad(ci, 2 * i + 1, 2 * j + 1);
        };
    }
    return n;
}

Node* Graph::chw_to_tokens(Node* x) {
    check(x->value.rank() == 3, "chw_to_tokens: x must be rank 3");
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    Tensor out({h * w, c});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out(i * w + j, ci) = x->value(ci, i, j);
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n, c, h, w](Graph& g) {
            g.ensure_grad(x);
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) x->grad(ci, i, j) += n->grad(i * w + j, ci);
        };
    }
    return n;
}

Node* Graph::tokens_to_chw(Node* x, int c, int h, int w) {
    check(x->value.rank() == 2, "tokens_to_chw: x must be rank 2");
    check(x->value.dim(0) == h * w && x->value.dim(1) == c, "tokens_to_chw: shape mismatch");
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out(ci, i, j) = x->value(i * w + j, ci);
    Node* n = make(std::move(out), x->needs_grad);
    if (n->needs_grad) {
        n->backward = [x, n, c, h, w](Graph& g) {
            g.ensure_grad(x);
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < w; ++j) x->grad(i * w + j, ci) += n->grad(ci, i, j);
        };
    }
    return n;
}

Node* Graph::sum_squared_diff(Node* a, Node* b) {
    check(a->value.same_shape(b->value), "sum_squared_diff: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a->value.data.size(); ++i) {
        const double d = a->value.data[i] - b->value.data[i];
        s += d * d;
    }
    Node* n = make(Tensor::scalar(s), a->needs_grad || b->needs_grad);
    if (n->needs_grad) {
        n->backward = [a, b, n](Graph& g) {
            const double gv = n->grad.data[0];
            if (a->needs_grad) g.ensure_grad(a);
            if (b->needs_grad) g.ensure_grad(b);
            for (std::size_t i = 0; i < a->value.data.size(); ++i) {
                const double d = 2.0 * (a->value.data[i] - b->value.data[i]) * gv;
                if (a->needs_grad) a->grad.data[i] += d;
                if (b->needs_grad) b->grad.data[i] -= d;
            }
        };
    }
    return n;
}

void Graph::backward(Node* root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be a scalar node");
    ensure_grad(root);
    root->grad.data[0] = 1.0;
    // Creation order is topological, so one reverse sweep suffices.
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->grad_ready && it->backward) it->backward(*this);
    }
    for (auto& [param, node] : leaves_) {
        if (!node->grad_ready) continue;
        for (std::size_t i = 0; i < node->grad.data.size(); ++i)
            param->grad.data[i] += node->grad.data[i];
    }
}

Node* multihead_attention(Graph& g, Node* query_in, Node* context_in,
                          const AttentionParams& params, int heads) {
    Node* q = g.row_bias(g.matmul(query_in, g.leaf(*params.wq)), g.leaf(*params.bq));
    Node* k = g.row_bias(g.matmul(context_in, g.leaf(*params.wk)), g.leaf(*params.bk));
    Node* v = g.row_bias(g.matmul(context_in, g.leaf(*params.wv)), g.leaf(*params.bv));
    const int inner = q->value.dim(1);
    if (heads < 1 || inner % heads != 0)
        throw std::invalid_argument("multihead_attention: width not divisible by heads");
    const int head_dim = inner / heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    std::vector<Node*> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int hd = 0; hd < heads; ++hd) {
        Node* qh = g.slice_cols(q, hd * head_dim, (hd + 1) * head_dim);
        Node* kh = g.slice_cols(k, hd * head_dim, (hd + 1) * head_dim);
        Node* vh = g.slice_cols(v, hd * head_dim, (hd + 1) * head_dim);
        Node* scores = g.scale(g.matmul_nt(qh, kh), att_scale);
        Node* attn = g.softmax_rows(scores);
        outs.push_back(g.matmul(attn, vh));
    }
    Node* merged = g.concat_cols(outs);
    return g.row_bias(g.matmul(merged, g.leaf(*params.wo)), g.leaf(*params.bo));
}

}  // namespace styletuner::ad
