#pragma once

#include <cstdint>
#include <memory>

#include "styletuner/backbone.hpp"

namespace styletuner {

// Desk-scale stand-in for a pretrained latent diffusion backbone. Operates
// directly in pixel-latent space (no VAE) and predicts the clean sample.
struct ToyModelConfig {
    int embed_dim = 32;
    int denoiser_channels = 16;
    std::vector<int> latent_shape = {3, 16, 16};
    int vocab_size = 0;  // 0 means "use the fixture tokenizer vocabulary"
    int num_attention_heads = 4;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const ToyModelConfig&) const = default;
};

// Text encoder: embedding lookup + sinusoidal positions + one pre-normed
// self-attention block + output projection. Denoiser: small convolutional
// encoder/decoder with a sinusoidal timestep embedding and one cross-attention
// block over the conditioning.
class ToyBackbone final : public Backbone {
public:
    explicit ToyBackbone(const ToyModelConfig& config);

    const ToyModelConfig& config() const { return config_; }
    std::vector<int> latent_shape() const override { return config_.latent_shape; }
    int embed_dim() const override { return config_.embed_dim; }
    int vocab_size() const override { return vocab_size_; }
    const FixtureTokenizer& tokenizer() const override { return tokenizer_; }

    ParameterRegistry& params() override { return params_; }
    const ParameterRegistry& params() const override { return params_; }

    ad::Node* encode_text_node(ad::Graph& g, std::span<const int> token_ids) override;
    ad::Node* denoise_node(ad::Graph& g, ad::Node* noisy, int timestep,
                           ad::Node* conditioning) override;

    Tensor token_embedding_rows(std::span<const int> token_ids) const override;
    void append_embedding_rows(const Tensor& rows) override;

    std::unique_ptr<Backbone> clone() const override;

private:
    ToyModelConfig config_;
    FixtureTokenizer tokenizer_;
    ParameterRegistry params_;
    int vocab_size_ = 0;
};

std::unique_ptr<Backbone> build_toy_backbone(const ToyModelConfig& config);

// Rows 0..count-1 of the standard sin/cos table at the given width.
Tensor sinusoidal_embedding(int count, int dim);

}  // namespace styletuner
