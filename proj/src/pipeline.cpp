#include "syncforge/pipeline.hpp"

#include "syncforge/errors.hpp"
#include "syncforge/nn/ops.hpp"
#include "syncforge/perceptual.hpp"

namespace syncforge {

namespace {

void require_rgb(const Image& img, const char* who) {
  if (img.channels() != 3) throw InvalidInput(std::string(who) + ": expected an RGB image");
}

}  // namespace

Image embedder_residual(nn::ModelBundle& model, const Image& img) {
  require_rgb(img, "embed");
  const Image luma = prepare_for_extraction(img, model.embed);
  nn::Graph g(false);
  const nn::Var out = model.embedder.forward(g, g.constant(nn::stack({luma})));
  return nn::unstack(out.value(), 0);
}

Image watermark(nn::ModelBundle& model, const Image& img) {
  return embed(img, embedder_residual(model, img), model.embed);
}

std::vector<CornerQuad> extract_quads(nn::ModelBundle& model, const std::vector<Image>& imgs) {
  std::vector<Image> lumas;
  lumas.reserve(imgs.size());
  for (const Image& img : imgs) {
    require_rgb(img, "extract");
    lumas.push_back(prepare_for_extraction(img, model.embed));
  }
  nn::Graph g(false);
  const nn::Tensor& pred = model.extractor.forward(g, g.constant(nn::stack(lumas))).value();
  std::vector<CornerQuad> out;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    std::array<double, 8> v{};
    for (int j = 0; j < 8; ++j) v[j] = pred[i * 8 + j];
    out.push_back(CornerQuad::from_flat(v));
  }
  return out;
}

CornerQuad extract_quad(nn::ModelBundle& model, const Image& img) {
  return extract_quads(model, {img}).front();
}

SyncResult synchronize(nn::ModelBundle& model, const Image& img) {
  SyncResult r;
  r.quad = extract_quad(model, img);
  try {
    r.restored = resync(img, r.quad, img.height(), img.width());
    r.ok = true;
  } catch (const Error& e) {
    r.message = e.what();
    r.restored = img;
  }
  return r;
}

}  // namespace syncforge
