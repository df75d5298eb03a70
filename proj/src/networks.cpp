#include "photogeo/networks.hpp"
#include "photogeo/camera.hpp"

#include "photogeo/ops.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace photogeo {

namespace {

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<Index> split_indices(const std::string& s) {
  std::vector<Index> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(std::stoll(item));
  return out;
}

}  // namespace

void NetConfig::validate() const {
  if (!is_power_of_two(image_size) || image_size < 8) {
    throw std::invalid_argument("image_size must be a power of two >= 8");
  }
  if (!is_power_of_two(pad_factor)) throw std::invalid_argument("pad_factor must be a power of two");
  if (channels.empty() || image_size >> channels.size() != 2) {
    throw std::invalid_argument("channels must have log2(image_size) - 1 stages");
  }
  if (pose_channels.empty() || (image_size >> pose_channels.size()) < 1) {
    throw std::invalid_argument("too many pose encoder stages for image_size");
  }
  if (zdim < 1) throw std::invalid_argument("zdim must be positive");
  if (!(depth_min > 0 && depth_min < depth_max)) throw std::invalid_argument("need 0 < depth_min < depth_max");
  if (!(rotation_range_deg > 0 && translation_range > 0 && light_angle_range_deg > 0)) {
    throw std::invalid_argument("ranges must be positive");
  }
  if (!(head_init >= 0)) throw std::invalid_argument("head_init must be non-negative");
}

std::map<std::string, std::string> NetConfig::to_map() const {
  std::ostringstream d0, d1, r, t, l, h;
  for (auto* s : {&d0, &d1, &r, &t, &l, &h}) s->precision(17);
  d0 << depth_min;
  d1 << depth_max;
  r << rotation_range_deg;
  t << translation_range;
  l << light_angle_range_deg;
  h << head_init;
  return {{"image_size", std::to_string(image_size)},
          {"pad_factor", std::to_string(pad_factor)},
          {"channels", join(channels)},
          {"pose_channels", join(pose_channels)},
          {"zdim", std::to_string(zdim)},
          {"dense_albedo", dense_albedo ? "1" : "0"},
          {"depth_min", d0.str()},
          {"depth_max", d1.str()},
          {"rotation_range_deg", r.str()},
          {"translation_range", t.str()},
          {"light_angle_range_deg", l.str()},
          {"head_init", h.str()},
          {"pivot_rotation", pivot_rotation ? "1" : "0"},
          {"seed", std::to_string(seed)}};
}

NetConfig NetConfig::from_map(const std::map<std::string, std::string>& kv) {
  NetConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "image_size") c.image_size = std::stoll(v);
    else if (k == "pad_factor") c.pad_factor = std::stoll(v);
    else if (k == "channels") c.channels = split_indices(v);
    else if (k == "pose_channels") c.pose_channels = split_indices(v);
    else if (k == "zdim") c.zdim = std::stoll(v);
    else if (k == "dense_albedo") c.dense_albedo = v == "1" || v == "true";
    else if (k == "depth_min") c.depth_min = std::stod(v);
    else if (k == "depth_max") c.depth_max = std::stod(v);
    else if (k == "rotation_range_deg") c.rotation_range_deg = std::stod(v);
    else if (k == "translation_range") c.translation_range = std::stod(v);
    else if (k == "light_angle_range_deg") c.light_angle_range_deg = std::stod(v);
    else if (k == "head_init") c.head_init = std::stod(v);
    else if (k == "pivot_rotation") c.pivot_rotation = v == "1" || v == "true";
    else if (k == "seed") c.seed = std::stoull(v);
  }
    return c;
}

template <typename Scalar>
Tensor<Scalar> squash_range(const Tensor<Scalar>& x, Scalar lo, Scalar hi) {
  if (!(lo < hi)) throw std::invalid_argument("squash_range: need lo < hi");
  return affine(tanh(x), (hi - lo) / 2, (hi + lo) / 2);
}

template <typename Scalar>
Decomposer<Scalar>::Decomposer(const NetConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  depth_net_ = make_encoder_decoder("depth", 1, false);
  albedo_net_ = make_encoder_decoder("albedo", 3, cfg_.dense_albedo);
  view_net_ = make_encoder("view", 6);
  light_net_ = make_encoder("light", 4);
}

template <typename Scalar>
typename Decomposer<Scalar>::Layer Decomposer<Scalar>::make_conv(const std::string& name, Index in,
                                                                 Index out, Index k, Index stride,
                                                                 Index pad, bool transpose, double gain) {
  Layer l;
  l.stride = stride;
  l.pad = pad;
  l.transpose = transpose;
  const Shape shape = transpose ? Shape{in, out, k, k} : Shape{out, in, k, k};
  Array<Scalar> w = Array<Scalar>::Zero(shape_size(shape));
  if (gain > 0) {
    const double fan_in = transpose ? double(in * k * k) / double(stride * stride) : double(in * k * k);
    std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / fan_in));
    for (Index i = 0; i < w.size(); ++i) w[i] = Scalar(normal(rng_));
  }
  l.weight = Tensor<Scalar>::from_array(shape, std::move(w), true);
  l.bias = Tensor<Scalar>::zeros({out}, true);
  params_.emplace_back(name + ".weight", l.weight);
  params_.emplace_back(name + ".bias", l.bias);
  return l;
}

template <typename Scalar>
typename Decomposer<Scalar>::EncoderDecoder Decomposer<Scalar>::make_encoder_decoder(
    const std::string& name, Index out_channels, bool dense) {
  EncoderDecoder net;
  const auto& ch = cfg_.channels;
  Index c = 3;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    net.encoder.push_back(make_conv(name + ".enc" + std::to_string(i), c, ch[i], 4, 2, 1, false, 1.0));
    c = ch[i];
  }
  net.encoder.push_back(make_conv(name + ".bottleneck", c, cfg_.zdim, 2, 1, 0, false, 1.0));

  // 1x1 -> 2x2, then doubling stages up to the padded grid.
  const Index top = ch.back();
  net.decoder.push_back(make_conv(name + ".dec0", cfg_.zdim, top, 2, 1, 0, true, 1.0));
  Index size = 2, stage = 0;
  c = top;
  while (size < cfg_.grid_size()) {
    const auto back = static_cast<Index>(ch.size()) - 2 - stage;
    const Index out = ch[static_cast<std::size_t>(std::max<Index>(0, back))];
    net.decoder.push_back(
        make_conv(name + ".dec" + std::to_string(stage + 1), c, out, 4, 2, 1, true, 1.0));
    if (dense) {
      const Index g = std::max<Index>(4, out / 2);
      const std::string b = name + ".dense" + std::to_string(stage + 1);
      DenseBlock blk;
      blk.conv1 = make_conv(b + ".conv1", out, g, 3, 1, 1, false, 1.0);
      blk.conv2 = make_conv(b + ".conv2", out + g, g, 3, 1, 1, false, 1.0);
      blk.transition = make_conv(b + ".transition", out + 2 * g, out, 1, 1, 0, false, 1.0);
      net.dense.push_back(blk);
    }
    c = out;
    size *= 2;
    ++stage;
  }
  net.head = make_conv(name + ".head", c, out_channels, 5, 1, 2, false, cfg_.head_init);
  return net;
}

template <typename Scalar>
typename Decomposer<Scalar>::Encoder Decomposer<Scalar>::make_encoder(const std::string& name,
                                                                      Index outputs) {
  Encoder net;
  Index c = 3;
  for (std::size_t i = 0; i < cfg_.pose_channels.size(); ++i) {
    net.convs.push_back(
        make_conv(name + ".enc" + std::to_string(i), c, cfg_.pose_channels[i], 4, 2, 1, false, 1.0));
    c = cfg_.pose_channels[i];
  }
  const Index rest = cfg_.image_size >> cfg_.pose_channels.size();
  net.convs.push_back(make_conv(name + ".pool", c, c, rest, 1, 0, false, 1.0));
  Array<Scalar> w = Array<Scalar>::Zero(outputs * c);
  if (cfg_.head_init > 0) {
    std::normal_distribution<double> normal(0.0, cfg_.head_init * std::sqrt(2.0 / double(c)));
    for (Index i = 0; i < w.size(); ++i) w[i] = Scalar(normal(rng_));
  }
  net.fc_weight = Tensor<Scalar>::from_array({outputs, c}, std::move(w), true);
  net.fc_bias = Tensor<Scalar>::zeros({outputs}, true);
  params_.emplace_back(name + ".fc.weight", net.fc_weight);
  params_.emplace_back(name + ".fc.bias", net.fc_bias);
  return net;
}

template <typename Scalar>
Tensor<Scalar> Decomposer<Scalar>::run(const Layer& l, const Tensor<Scalar>& x) const {
  return l.transpose ? conv_transpose2d(x, l.weight, l.bias, l.stride, l.pad)
                     : conv2d(x, l.weight, l.bias, l.stride, l.pad);
}

template <typename Scalar>
Tensor<Scalar> Decomposer<Scalar>::run(const EncoderDecoder& net, const Tensor<Scalar>& x) const {
  const Scalar slope(0.2);
  Tensor<Scalar> h = x;
  for (const auto& l : net.encoder) h = leaky_relu(run(l, h), slope);
  for (std::size_t i = 0; i < net.decoder.size(); ++i) {
    h = relu(run(net.decoder[i], h));
    if (!net.dense.empty() && i > 0) {
      const auto& blk = net.dense[i - 1];
      const auto y1 = relu(run(blk.conv1, h));
      const auto x1 = concat_channels<Scalar>({h, y1});
      const auto y2 = relu(run(blk.conv2, x1));
      h = relu(run(blk.transition, concat_channels<Scalar>({x1, y2})));
    }
  }
  return run(net.head, h);
}

template <typename Scalar>
Tensor<Scalar> Decomposer<Scalar>::run(const Encoder& net, const Tensor<Scalar>& x) const {
  Tensor<Scalar> h = x;
  for (const auto& l : net.convs) h = leaky_relu(run(l, h), Scalar(0.2));
  h = reshape(h, {h.dim(0), h.dim(1)});
  return linear(h, net.fc_weight, net.fc_bias);
}

template <typename Scalar>
Decomposition<Scalar> Decomposer<Scalar>::operator()(const Tensor<Scalar>& image) const {
  const Index S = cfg_.image_size;
  if (image.ndim() != 4 || image.dim(1) != 3 || image.dim(2) != S || image.dim(3) != S) {
    throw std::invalid_argument("decompose: expected image [B, 3, " + std::to_string(S) + ", " +
                                std::to_string(S) + "], got " + shape_string(image.shape()));
  }
  const Scalar deg = std::numbers::pi_v<Scalar> / Scalar(180);
  Decomposition<Scalar> out;
  out.depth = squash_range(run(depth_net_, image), Scalar(cfg_.depth_min), Scalar(cfg_.depth_max));
  out.albedo = sigmoid(run(albedo_net_, image));
  const auto view = run(view_net_, image);
  const Scalar rot = Scalar(cfg_.rotation_range_deg) * deg;
  const Scalar tr = Scalar(cfg_.translation_range);
  out.pose = concat_columns<Scalar>({squash_range(columns(view, 0, 3), -rot, rot),
                                     squash_range(columns(view, 3, 3), -tr, tr)});
  if (cfg_.pivot_rotation) out.pose = pivot_pose(out.pose, Scalar(0.5 * (cfg_.depth_min + cfg_.depth_max)));
  const auto light = run(light_net_, image);
  const Scalar la = Scalar(cfg_.light_angle_range_deg);
  out.light_angles = squash_range(columns(light, 0, 2), -la, la);
  out.ambient = sigmoid(columns(light, 2, 1));
  out.diffuse = sigmoid(columns(light, 3, 1));
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> Decomposer<Scalar>::parameters() const {
  std::vector<Tensor<Scalar>> out;
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

template <typename Scalar>
Index Decomposer<Scalar>::parameter_count() const {
  Index n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

template <typename Scalar>
void Decomposer<Scalar>::save(const std::filesystem::path& path) const {
  Checkpoint ck;
  ck.config = cfg_.to_map();
  for (const auto& [name, t] : params_) {
    std::vector<float> v(static_cast<std::size_t>(t.size()));
    for (Index i = 0; i < t.size(); ++i) v[static_cast<std::size_t>(i)] = static_cast<float>(t.value()[i]);
    ck.tensors.push_back({name, {t.shape(), std::move(v)}});
  }
  ck.save(path);
}

template <typename Scalar>
Decomposer<Scalar> Decomposer<Scalar>::load(const std::filesystem::path& path) {
  const auto ck = Checkpoint::load(path);
  Decomposer net(NetConfig::from_map(ck.config));
  if (ck.tensors.size() != net.params_.size()) {
    throw std::runtime_error("checkpoint " + path.string() + " does not match the configured network");
  }
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    const auto& [name, data] = ck.tensors[i];
    auto& [pname, p] = net.params_[i];
    if (name != pname || data.first != p.shape()) {
      throw std::runtime_error("checkpoint tensor " + name + " does not match parameter " + pname);
    }
    for (Index j = 0; j < p.size(); ++j) p.mutable_value()[j] = Scalar(data.second[static_cast<std::size_t>(j)]);
  }
  return net;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ostringstream header;
  header << "PHOTOGEO-CKPT-1\n";
  for (const auto& [k, v] : config) header << "config " << k << '=' << v << '\n';
  std::size_t offset = 0;
  for (const auto& [name, data] : tensors) {
    std::string dims;
    for (std::size_t i = 0; i < data.first.size(); ++i) dims += (i ? "x" : "") + std::to_string(data.first[i]);
    if (dims.empty()) dims = "scalar";
    header << "tensor " << name << ' ' << dims << ' ' << offset << ' ' << data.second.size() << '\n';
    offset += data.second.size() * sizeof(float);
  }
  header << "data\n";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, data] : tensors) {
    os.write(reinterpret_cast<const char*>(data.second.data()),
             static_cast<std::streamsize>(data.second.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "PHOTOGEO-CKPT-1") {
    throw std::runtime_error(path.string() + " is not a PHOTOGEO-CKPT-1 checkpoint");
  }
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset, count;
  };
  std::vector<Entry> entries;
  Checkpoint ck;
  bool data = false;
  while (std::getline(is, line)) {
    if (line == "data") {
      data = true;
      break;
    }
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "config") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      const auto eq = rest.find('=');
      if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed config line");
      ck.config[rest.substr(0, eq)] = rest.substr(eq + 1);
    } else if (kind == "tensor") {
      Entry e;
      std::string dims;
      ls >> e.name >> dims >> e.offset >> e.count;
      if (!ls) throw std::runtime_error("checkpoint: malformed tensor line '" + line + "'");
      if (dims != "scalar") {
        std::istringstream ds(dims);
        std::string d;
        while (std::getline(ds, d, 'x')) e.shape.push_back(std::stoll(d));
      }
      if (static_cast<std::size_t>(shape_size(e.shape)) != e.count) {
        throw std::runtime_error("checkpoint: shape and count disagree for " + e.name);
      }
      entries.push_back(std::move(e));
    } else {
      throw std::runtime_error("checkpoint: unexpected line '" + line + "'");
    }
  }
  if (!data) throw std::runtime_error("checkpoint: missing data section");
  const std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  for (auto& e : entries) {
    if (e.offset + e.count * sizeof(float) > blob.size()) {
      throw std::runtime_error("checkpoint: truncated data for " + e.name);
    }
    std::vector<float> v(e.count);
    std::memcpy(v.data(), blob.data() + e.offset, e.count * sizeof(float));
    ck.tensors.push_back({e.name, {e.shape, std::move(v)}});
  }
  return ck;
}

template Tensor<float> squash_range(const Tensor<float>&, float, float);
template Tensor<double> squash_range(const Tensor<double>&, double, double);
template class Decomposer<float>;
template class Decomposer<double>;

}  // namespace photogeo
