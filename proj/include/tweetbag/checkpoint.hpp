#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tweetbag/models.hpp"
#include "tweetbag/vocab.hpp"

namespace tweetbag {

/*
 * Checkpoint layout. Integers are unsigned little-endian; f64 is the IEEE-754
 * bit pattern written as a little-endian u64.
 *
 *   magic            8 bytes  "TWBAGCKP"
 *   version          u32      (1)
 *   kind             u32      0 cnn, 1 lstm, 2 bilstm, 3 attbilstm, 4 transformer
 *   config           u64 embedding_dim, u64 vocab_size, u64 max_len, f64 dropout,
 *                    u64 rnn_units, u64 n, n x u64 cnn_filter_sizes,
 *                    u64 cnn_filters_per_size, u64 tf_layers, u64 tf_heads,
 *                    u64 tf_model_dim, u64 tf_ff_dim, u8 freeze_embeddings
 *   vocabulary       u64 min_freq, u64 count, count x (u32 length, bytes);
 *                    entries 0 and 1 are the reserved PAD and UNK spellings
 *   parameters       u64 count, then per parameter:
 *                    u32 name length, name bytes, u32 rank, rank x u64 dims,
 *                    product(dims) x f64 values
 */

inline constexpr std::string_view kCheckpointMagic = "TWBAGCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Model model;
    Vocabulary vocab;
};

std::string serialize_checkpoint(const Model& model, const Vocabulary& vocab);
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tweetbag
