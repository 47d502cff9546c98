#pragma once

#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "styletuner/params.hpp"
#include "styletuner/tensor.hpp"

namespace styletuner::ad {

class Graph;

// One value in a define-by-run computation. Creation order is a valid
// topological order, so the reverse pass is a single backward sweep.
struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    bool grad_ready = false;
    Parameter* param = nullptr;  // set on parameter leaves
    std::function<void(Graph&)> backward;
};

// Per-forward-pass arena. Nodes live as long as the graph. A parameter used
// several times maps to a single leaf node, so its gradient contributions
// accumulate in one buffer and are flushed to Parameter::grad by backward().
class Graph {
public:
    Node* constant(Tensor value);
    Node* leaf(Parameter& param);

    Node* add(Node* a, Node* b);
    Node* sub(Node* a, Node* b);
    Node* scale(Node* a, double factor);
    Node* matmul(Node* a, Node* b);     // (m,k) x (k,n) -> (m,n)
    Node* matmul_nt(Node* a, Node* b);  // (m,k) x (n,k)^T -> (m,n)
    Node* row_bias(Node* x, Node* bias);       // (r,c) + (c)
    Node* channel_bias(Node* x, Node* bias);   // (c,h,w) + broadcast (c) or (1,c)
    Node* gather_rows(Node* table, std::vector<int> rows);
    Node* slice_cols(Node* x, int col_begin, int col_end);
    Node* concat_cols(const std::vector<Node*>& parts);
    Node* softmax_rows(Node* x);
    Node* rmsnorm_rows(Node* x, Node* gain, double eps = 1e-6);
    Node* silu(Node* x);
    Node* conv2d(Node* x, Node* weight, Node* bias, int stride);  // 3x3, pad 1
    Node* upsample2x(Node* x);
    Node* chw_to_tokens(Node* x);                       // (c,h,w) -> (h*w, c)
    Node* tokens_to_chw(Node* x, int c, int h, int w);  // inverse
    Node* sum_squared_diff(Node* a, Node* b);           // scalar

    // Accumulates into Parameter::grad for every leaf; root must be scalar.
    void backward(Node* root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    Node* make(Tensor value, bool needs_grad);
    void ensure_grad(Node* n);
    friend struct NodeOps;

    std::deque<Node> nodes_;
    std::unordered_map<Parameter*, Node*> leaves_;
};

// Multi-head attention built from graph primitives. Queries come from
// `query_in` (rows are positions), keys/values from `context_in`. Weight
// shapes: wq (dq,a), wk (dk,a), wv (dk,a), wo (a,dout); biases match the
// projection widths. `a` must be divisible by `heads`.
struct AttentionParams {
    Parameter* wq;
    Parameter* bq;
    Parameter* wk;
    Parameter* bk;
    Parameter* wv;
    Parameter* bv;
    Parameter* wo;
    Parameter* bo;
};

Node* multihead_attention(Graph& g, Node* query_in, Node* context_in,
                          const AttentionParams& params, int heads);

}  // namespace styletuner::ad
