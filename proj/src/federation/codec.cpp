#include "fids/federation/codec.hpp"

#include <bit>
#include <string>

namespace fids::federation {

namespace {

constexpr std::uint8_t kInternalTag = 0;
constexpr std::uint8_t kLeafTag = 1;
// Pre-order decoding recurses; bound it well above any trainable depth.
constexpr std::size_t kMaxTreeDepth = 64;

void write_tree(ByteWriter& out, const gbdt::RegressionTree& tree) {
  for (const auto& node : tree.nodes()) {
    if (node.leaf) {
      out.u8(kLeafTag);
      out.f64(node.value);
    } else {
      out.u8(kInternalTag);
      out.u32(node.feature);
      out.f64(node.threshold);
    }
  }
}

void read_subtree(ByteReader& in, std::vector<gbdt::RegressionTree::Node>& nodes, std::size_t depth) {
  if (depth > kMaxTreeDepth) throw DecodeError("model tree exceeds maximum depth");
  const std::uint8_t tag = in.u8();
  if (tag == kLeafTag) {
    nodes.push_back({.leaf = true, .value = in.f64()});
    return;
  }
  if (tag != kInternalTag) throw BadNodeTag("unknown tree node tag " + std::to_string(tag));
  const std::size_t at = nodes.size();
  const std::uint32_t feature = in.u32();
  const double threshold = in.f64();
  nodes.push_back({.leaf = false, .feature = feature, .threshold = threshold});
  read_subtree(in, nodes, depth + 1);
  nodes[at].right = static_cast<std::uint32_t>(nodes.size());
  read_subtree(in, nodes, depth + 1);
}

}  // namespace

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  if (remaining() < n) throw TruncatedInput("input ends inside a byte block");
  const auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint64_t ByteReader::get(std::size_t width) {
  if (remaining() < width) throw TruncatedInput("input truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in_[pos_ + i];
  pos_ += width;
  return v;
}

Bytes serialize_model(const gbdt::GbdtModel& model) {
  ByteWriter out;
  out.u16(kModelFormatVersion);
  out.u32(model.n_classes);
  out.u32(model.n_features);
  out.u32(static_cast<std::uint32_t>(model.params.depth));
  out.u32(static_cast<std::uint32_t>(model.rounds()));
  out.f64(model.params.learning_rate);
  out.f64(model.params.l2_leaf_reg);
  out.u64(model.params.seed);
  for (double b : model.base_scores) out.f64(b);
  for (const auto& tree : model.trees) write_tree(out, tree);
  return out.take();
}

gbdt::GbdtModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const std::uint16_t version = in.u16();
  if (version != kModelFormatVersion) {
    throw VersionMismatch("model format version " + std::to_string(version) + " is not supported");
  }
  gbdt::GbdtModel model;
  model.n_classes = in.u32();
  model.n_features = in.u32();
  model.params.depth = static_cast<int>(in.u32());
  const std::uint32_t rounds = in.u32();
  model.params.iterations = static_cast<int>(rounds);
  model.params.learning_rate = in.f64();
  model.params.l2_leaf_reg = in.f64();
  model.params.seed = in.u64();
  if (model.n_classes == 0) throw DecodeError("model declares zero classes");
  if (in.remaining() / 8 < model.n_classes) throw TruncatedInput("model base scores truncated");
  for (std::uint32_t c = 0; c < model.n_classes; ++c) model.base_scores.push_back(in.f64());

  // Each tree needs at least 9 bytes; reject impossible counts before allocating.
  const std::uint64_t n_trees = static_cast<std::uint64_t>(rounds) * model.n_classes;
  if (n_trees > in.remaining() / 9) throw TruncatedInput("model trees truncated");
  model.trees.reserve(n_trees);
  std::vector<gbdt::RegressionTree::Node> nodes;
  for (std::uint64_t t = 0; t < n_trees; ++t) {
    nodes.clear();
    read_subtree(in, nodes, 0);
    model.trees.emplace_back(nodes);
  }
  if (!in.done()) throw DecodeError("trailing bytes after model");
  try {
    model.validate();
  } catch (const DataError& e) {
    throw DecodeError(std::string("decoded model is invalid: ") + e.what());
  }
  return model;
}

}  // namespace fids::federation
