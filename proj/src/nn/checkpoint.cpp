#include "dafd/nn/checkpoint.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "dafd/error.hpp"
#include "dafd/text_io.hpp"

namespace dafd::nn {
namespace {

constexpr const char* kMagic = "dafd-checkpoint v1";

void write_tensor(std::ostringstream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.rank();
  for (std::size_t d : t.shape) out << ' ' << d;
  out << " :";
  for (double v : t.values) out << ' ' << format_hex(v);
  out << '\n';
}

double parse_hex_field(const std::string& s, const std::string& what) {
  const auto v = parse_double(s);
  if (!v) throw DataError("checkpoint: bad number for " + what + ": '" + s + "'");
  return *v;
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "hyperparams " << format_hex(ckpt.hp.dropout) << ' ' << format_hex(ckpt.hp.lr) << ' '
      << format_hex(ckpt.hp.lambda) << '\n';
  out << "adam_steps " << ckpt.adam.step[0] << ' ' << ckpt.adam.step[1] << ' ' << ckpt.adam.step[2] << '\n';
  for (const ConstParamRef& r : all_tensors(ckpt.params)) write_tensor(out, "param." + r.name, *r.tensor);
  for (const ConstParamRef& r : learnable(ckpt.adam.m)) write_tensor(out, "adam_m." + r.name, *r.tensor);
  for (const ConstParamRef& r : learnable(ckpt.adam.v)) write_tensor(out, "adam_v." + r.name, *r.tensor);
  return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMagic) throw DataError("checkpoint: missing header");

  Checkpoint ckpt;
  ckpt.params = ModelParams::zeros();
  ckpt.adam = AdamState::zeros();
  bool have_hp = false;
  bool have_steps = false;
  std::map<std::string, Tensor> tensors;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    const std::string where = "checkpoint line " + std::to_string(line_no);
    if (kind == "hyperparams") {
      std::string a, b, c;
      if (!(ls >> a >> b >> c)) throw DataError(where + ": incomplete hyperparams");
      ckpt.hp = {parse_hex_field(a, "dropout"), parse_hex_field(b, "lr"), parse_hex_field(c, "lambda")};
      have_hp = true;
    } else if (kind == "adam_steps") {
      for (auto& s : ckpt.adam.step) {
        if (!(ls >> s) || s < 0) throw DataError(where + ": bad adam step counter");
      }
      have_steps = true;
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rank = 0;
      if (!(ls >> name >> rank)) throw DataError(where + ": bad tensor header");
      std::vector<std::size_t> dims(rank);
      for (auto& d : dims) {
        if (!(ls >> d)) throw DataError(where + ": bad tensor shape");
      }
      std::string colon;
      if (!(ls >> colon) || colon != ":") throw DataError(where + ": expected ':'");
      Tensor t(dims);
      for (double& v : t.values) {
        std::string tok;
        if (!(ls >> tok)) throw DataError(where + ": too few values for " + name);
        v = parse_hex_field(tok, name);
        if (!std::isfinite(v)) throw DataError(where + ": non-finite value in " + name);
      }
      std::string extra;
      if (ls >> extra) throw DataError(where + ": too many values for " + name);
      if (!tensors.emplace(name, std::move(t)).second) throw DataError(where + ": duplicate tensor " + name);
    } else {
      throw DataError(where + ": unknown record '" + kind + "'");
    }
  }
  if (!have_hp || !have_steps) throw DataError("checkpoint: missing hyperparams or adam_steps");

  const auto take = [&](const std::string& name, Tensor* dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint: missing tensor " + name);
    if (!it->second.same_shape(*dst)) {
      throw DataError("checkpoint: tensor " + name + " has shape " + shape_string(it->second.shape) +
                      ", expected " + shape_string(dst->shape));
    }
    *dst = std::move(it->second);
    tensors.erase(it);
  };
  for (const ParamRef& r : all_tensors(ckpt.params)) take("param." + r.name, r.tensor);
  for (const ParamRef& r : learnable(ckpt.adam.m)) take("adam_m." + r.name, r.tensor);
  for (const ParamRef& r : learnable(ckpt.adam.v)) take("adam_v." + r.name, r.tensor);
  if (!tensors.empty()) throw DataError("checkpoint: unexpected tensor " + tensors.begin()->first);
  for (const auto& blk : ckpt.params.extractor) {
    for (double v : blk.running_var.values) {
      if (v < 0.0) throw DataError("checkpoint: negative running variance");
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file(path, checkpoint_to_text(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_text(read_file(path)); }

}  // namespace dafd::nn
