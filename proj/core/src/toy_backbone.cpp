#include "styletuner/toy_backbone.hpp"

#include <cmath>
#include <stdexcept>

#include "styletuner/rng.hpp"

namespace styletuner {

namespace {

ad::AttentionParams attention_params(ParameterRegistry& reg, const std::string& prefix) {
    return {&reg.find(prefix + ".wq"), &reg.find(prefix + ".bq"), &reg.find(prefix + ".wk"),
            &reg.find(prefix + ".bk"), &reg.find(prefix + ".wv"), &reg.find(prefix + ".bv"),
            &reg.find(prefix + ".wo"), &reg.find(prefix + ".bo")};
}

}  // namespace

void ToyModelConfig::validate() const {
    if (embed_dim < 2) throw std::invalid_argument("toy config: embed_dim must be >= 2");
    if (num_attention_heads < 1)
        throw std::invalid_argument("toy config: num_attention_heads must be >= 1");
    if (embed_dim % num_attention_heads != 0)
        throw std::invalid_argument("toy config: embed_dim must be divisible by heads");
    if (denoiser_channels < 1 || denoiser_channels % num_attention_heads != 0)
        throw std::invalid_argument("toy config: denoiser_channels must be divisible by heads");
    if (latent_shape.size() != 3) throw std::invalid_argument("toy config: latent must be rank 3");
    if (latent_shape[0] < 1) throw std::invalid_argument("toy config: latent channels must be >= 1");
    if (latent_shape[1] < 4 || latent_shape[2] < 4 || latent_shape[1] % 2 != 0 ||
        latent_shape[2] % 2 != 0)
        throw std::invalid_argument("toy config: latent height/width must be even and >= 4");
    if (vocab_size < 0) throw std::invalid_argument("toy config: vocab_size must be >= 0");
}

Tensor sinusoidal_embedding(int count, int dim) {
    Tensor out({count, dim});
    const int half = dim / 2;
    for (int pos = 0; pos < count; ++pos) {
        for (int i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * i / half);
            out(pos, 2 * i) = std::sin(pos * freq);
            out(pos, 2 * i + 1) = std::cos(pos * freq);
        }
        if (dim % 2 == 1) out(pos, dim - 1) = 0.0;
    }
    return out;
}

ToyBackbone::ToyBackbone(const ToyModelConfig& config) : config_(config) {
    config_.validate();
    vocab_size_ = config_.vocab_size > 0 ? config_.vocab_size : tokenizer_.vocab_size();
    if (vocab_size_ < tokenizer_.vocab_size())
        throw std::invalid_argument("toy config: vocab_size below tokenizer vocabulary");
    config_.vocab_size = vocab_size_;

    const int d = config_.embed_dim;
    const int c = config_.denoiser_channels;
    const int cin = config_.latent_shape[0];
    RandomSource rng(config_.seed, "toy-init");

    auto randn = [&rng](std::vector<int> shape, double stddev) {
        return Tensor::randn(std::move(shape), rng, stddev);
    };
    auto add_attention = [&](const std::string& prefix, ParamGroup group, int dq, int dkv,
                             int inner, int dout) {
        params_.add(prefix + ".wq", group, randn({dq, inner}, 1.0 / std::sqrt(dq)));
        params_.add(prefix + ".bq", group, Tensor::zeros({inner}));
        params_.add(prefix + ".wk", group, randn({dkv, inner}, 1.0 / std::sqrt(dkv)));
        params_.add(prefix + ".bk", group, Tensor::zeros({inner}));
        params_.add(prefix + ".wv", group, randn({dkv, inner}, 1.0 / std::sqrt(dkv)));
        params_.add(prefix + ".bv", group, Tensor::zeros({inner}));
        params_.add(prefix + ".wo", group, randn({inner, dout}, 1.0 / std::sqrt(inner)));
        params_.add(prefix + ".bo", group, Tensor::zeros({dout}));
    };
    auto add_conv = [&](const std::string& prefix, int out_ch, int in_ch, double gain) {
        params_.add(prefix + ".w", ParamGroup::DenoiserOther,
                    randn({out_ch, in_ch, 3, 3}, gain * std::sqrt(2.0 / (in_ch * 9))));
        params_.add(prefix + ".b", ParamGroup::DenoiserOther, Tensor::zeros({out_ch}));
    };

    // Text encoder.
    params_.add("text.embed", ParamGroup::TokenEmbedding, randn({vocab_size_, d}, 0.05));
    params_.add("text.norm1.gain", ParamGroup::TextOther, Tensor::full({d}, 1.0));
    add_attention("text.attn", ParamGroup::TextAttention, d, d, d, d);
    params_.add("text.norm2.gain", ParamGroup::TextOther, Tensor::full({d}, 1.0));
    params_.add("text.proj.w", ParamGroup::TextOther, randn({d, d}, 1.0 / std::sqrt(d)));
    params_.add("text.proj.b", ParamGroup::TextOther, Tensor::zeros({d}));

    // Denoiser.
    add_conv("unet.conv_in", c, cin, 1.0);
    params_.add("unet.time.w", ParamGroup::DenoiserOther, randn({d, c}, 1.0 / std::sqrt(d)));
    params_.add("unet.time.b", ParamGroup::DenoiserOther, Tensor::zeros({c}));
    add_conv("unet.conv_down", c, c, 1.0);
    params_.add("unet.norm.gain", ParamGroup::DenoiserOther, Tensor::full({c}, 1.0));
    add_attention("unet.attn", ParamGroup::DenoiserAttention, c, d, c, c);
    add_conv("unet.conv_mid", c, c, 1.0);
    add_conv("unet.conv_up", c, c, 1.0);
    add_conv("unet.conv_out", cin, c, 0.2);
}

ad::Node* ToyBackbone::encode_text_node(ad::Graph& g, std::span<const int> token_ids) {
    if (token_ids.empty()) throw std::invalid_argument("encode_text: empty token sequence");
    for (int id : token_ids) {
        if (id < 0 || id >= vocab_size_)
            throw std::out_of_range("encode_text: token id out of vocabulary: " +
                                    std::to_string(id));
    }
    const int len = static_cast<int>(token_ids.size());
    ad::Node* embedded =
        g.gather_rows(g.leaf(params_.find("text.embed")), {token_ids.begin(), token_ids.end()});
    ad::Node* x = g.add(embedded, g.constant(sinusoidal_embedding(len, config_.embed_dim)));
    ad::Node* normed = g.rmsnorm_rows(x, g.leaf(params_.find("text.norm1.gain")));
    ad::Node* attn = ad::multihead_attention(g, normed, normed, attention_params(params_, "text.attn"),
                                             config_.num_attention_heads);
    ad::Node* residual = g.add(x, attn);
    ad::Node* out_norm = g.rmsnorm_rows(residual, g.leaf(params_.find("text.norm2.gain")));
    return g.row_bias(g.matmul(out_norm, g.leaf(params_.find("text.proj.w"))),
                      g.leaf(params_.find("text.proj.b")));
}

ad::Node* ToyBackbone::denoise_node(ad::Graph& g, ad::Node* noisy, int timestep,
                                    ad::Node* conditioning) {
    if (noisy->value.shape != config_.latent_shape)
        throw std::invalid_argument("denoise: latent shape mismatch");
    if (timestep < 0) throw std::out_of_range("denoise: negative timestep");
    if (conditioning->value.rank() != 2 || conditioning->value.dim(1) != config_.embed_dim)
        throw std::invalid_argument("denoise: conditioning width mismatch");

    const int c = config_.denoiser_channels;
    const int h = config_.latent_shape[1];
    const int w = config_.latent_shape[2];

    ad::Node* h1 = g.conv2d(noisy, g.leaf(params_.find("unet.conv_in.w")),
                            g.leaf(params_.find("unet.conv_in.b")), 1);
    Tensor trow = sinusoidal_embedding(timestep + 1, config_.embed_dim);
    Tensor tvec({1, config_.embed_dim});
    for (int i = 0; i < config_.embed_dim; ++i) tvec(0, i) = trow(timestep, i);
    ad::Node* temb = g.row_bias(g.matmul(g.constant(tvec), g.leaf(params_.find("unet.time.w"))),
                                g.leaf(params_.find("unet.time.b")));
    ad::Node* h1t = g.channel_bias(h1, temb);

    ad::Node* down = g.conv2d(g.silu(h1t), g.leaf(params_.find("unet.conv_down.w")),
                              g.leaf(params_.find("unet.conv_down.b")), 2);
    ad::Node* tokens = g.chw_to_tokens(down);
    ad::Node* tokens_normed = g.rmsnorm_rows(tokens, g.leaf(params_.find("unet.norm.gain")));
    ad::Node* attn = ad::multihead_attention(g, tokens_normed, conditioning,
                                             attention_params(params_, "unet.attn"),
                                             config_.num_attention_heads);
    ad::Node* fused = g.tokens_to_chw(g.add(tokens, attn), c, h / 2, w / 2);

    ad::Node* mid = g.conv2d(g.silu(fused), g.leaf(params_.find("unet.conv_mid.w")),
                             g.leaf(params_.find("unet.conv_mid.b")), 1);
    ad::Node* up = g.add(g.upsample2x(mid), h1t);
    ad::Node* refined = g.conv2d(g.silu(up), g.leaf(params_.find("unet.conv_up.w")),
                                 g.leaf(params_.find("unet.conv_up.b")), 1);
    return g.conv2d(g.silu(refined), g.leaf(params_.find("unet.conv_out.w")),
                    g.leaf(params_.find("unet.conv_out.b")), 1);
}

Tensor ToyBackbone::token_embedding_rows(std::span<const int> token_ids) const {
    const Parameter& table = params_.find("text.embed");
    Tensor out({static_cast<int>(token_ids.size()), config_.embed_dim});
    for (std::size_t i = 0; i < token_ids.size(); ++i) {
        const int id = token_ids[i];
        if (id < 0 || id >= vocab_size_)
            throw std::out_of_range("token_embedding_rows: id out of vocabulary");
        for (int j = 0; j < config_.embed_dim; ++j)
            out(static_cast<int>(i), j) = table.value(id, j);
    }
    return out;
}

void ToyBackbone::append_embedding_rows(const Tensor& rows) {
    if (rows.rank() != 2 || rows.dim(1) != config_.embed_dim)
        throw std::invalid_argument("append_embedding_rows: rows must be (n, embed_dim)");
    if (!rows.all_finite())
        throw std::invalid_argument("append_embedding_rows: rows must be finite");
    Parameter& table = params_.find("text.embed");
    table.value.shape[0] += rows.dim(0);
    table.value.data.insert(table.value.data.end(), rows.data.begin(), rows.data.end());
    table.grad = Tensor::zeros(table.value.shape);
    vocab_size_ += rows.dim(0);
}

std::unique_ptr<Backbone> ToyBackbone::clone() const {
    auto copy = std::make_unique<ToyBackbone>(config_);
    for (const Parameter* src : params_.all()) {
        Parameter& dst = copy->params_.find(src->name);
        dst.value = src->value;
        dst.grad = Tensor::zeros(src->value.shape);
    }
    copy->vocab_size_ = vocab_size_;
    copy->spans_ = spans_;
    return copy;
}

std::unique_ptr<Backbone> build_toy_backbone(const ToyModelConfig& config) {
    return std::make_unique<ToyBackbone>(config);
}

}  // namespace styletuner
