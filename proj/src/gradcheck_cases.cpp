#include <cmath>
#include <memory>
#include <vector>

#include "statn/errors.hpp"
#include "statn/pipeline.hpp"
#include "statn/sampler.hpp"

namespace statn {

namespace {

std::vector<double> concat_vals(const std::vector<const Tensor*>& parts) {
  std::vector<double> x;
  for (const Tensor* t : parts) x.insert(x.end(), t->data.begin(), t->data.end());
  return x;
}

void scatter_vals(const std::vector<double>& x, const std::vector<Tensor*>& parts) {
  std::size_t off = 0;
  for (Tensor* t : parts) {
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(off),
              x.begin() + static_cast<std::ptrdiff_t>(off + t->data.size()),
              t->data.begin());
    off += t->data.size();
  }
}

Tensor gaussian_tensor(std::vector<int> shape, Rng& rng, double mean = 0.0,
                       double stddev = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.gaussian(mean, stddev);
  return t;
}

// grid whose pixel coordinates stay well away from the tent-kernel kinks
Tensor safe_sample_grid(int count, int image_h, int image_w, Rng& rng) {
  Tensor grid({2, count});
  for (int j = 0; j < count; ++j) {
    const double px = static_cast<double>(rng.uniform_index(image_w - 1)) +
                      rng.uniform(0.3, 0.7);
    const double py = static_cast<double>(rng.uniform_index(image_h - 1)) +
                      rng.uniform(0.3, 0.7);
    grid(0, j) = 2.0 * px / (image_w - 1) - 1.0;
    grid(1, j) = 2.0 * py / (image_h - 1) - 1.0;
  }
  return grid;
}

std::vector<Tensor*> model_param_values(StaTNModel& m) {
  std::vector<Tensor*> parts;
  for (auto& p : m.localiser.params) parts.push_back(&p.value);
  parts.push_back(&m.shape_mean.value);
  parts.push_back(&m.shape_basis.value);
  if (m.has_appearance()) {
    parts.push_back(&m.tex_mean.value);
    parts.push_back(&m.tex_basis.value);
  }
  for (auto& p : m.classifier.params) parts.push_back(&p.value);
  return parts;
}

std::vector<const Tensor*> accum_parts(const GradAccum& acc, bool has_appearance,
                                       std::size_t classifier_params) {
  std::vector<const Tensor*> parts;
  for (const auto& t : acc.localiser) parts.push_back(&t);
  parts.push_back(&acc.shape_mean);
  parts.push_back(&acc.shape_basis);
  if (has_appearance) {
    parts.push_back(&acc.tex_mean);
    parts.push_back(&acc.tex_basis);
  }
  for (std::size_t i = 0; i < classifier_params; ++i)
    parts.push_back(&acc.classifier[i]);
  return parts;
}

}  // namespace

std::vector<GradCheckCase> standard_gradient_cases(std::uint64_t seed,
                                                   bool fault_rotation_sign) {
  std::vector<GradCheckCase> cases;

  cases.push_back({"conv2d", 1e-6, [seed](double eps) {
    Rng rng(seed + 11);
    Tensor in = gaussian_tensor({5, 4, 2}, rng);
    Tensor w = gaussian_tensor({3, 3, 2, 3}, rng, 0.0, 0.5);
    Tensor b = gaussian_tensor({3}, rng);
    const Tensor g = gaussian_tensor({5, 4, 3}, rng);
    Tensor din(in.shape), dw(w.shape), db(b.shape);
    conv2d_backward(in, w, 1, 1, g, &din, &dw, &db);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&in, &w, &b});
      return dot(conv2d(in, w, b, 1, 1), g);
    };
    return finite_diff_check(f, concat_vals({&in, &w, &b}),
                             concat_vals({&din, &dw, &db}), eps);
  }});

  cases.push_back({"relu", 1e-4, [seed](double eps) {
    Rng rng(seed + 12);
    Tensor in = gaussian_tensor({4, 5, 1}, rng);
    for (double& v : in.data) v += (v >= 0.0 ? 0.2 : -0.2);  // keep off the kink
    const Tensor g = gaussian_tensor(in.shape, rng);
    Tensor din(in.shape);
    relu_backward(in, g, &din);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&in});
      return dot(relu(in), g);
    };
    return finite_diff_check(f, concat_vals({&in}), concat_vals({&din}), eps);
  }});

  cases.push_back({"maxpool", 1e-4, [seed](double eps) {
    Rng rng(seed + 13);
    Tensor in = gaussian_tensor({6, 6, 2}, rng);
    const Tensor g = gaussian_tensor({3, 3, 2}, rng);
    Tensor din(in.shape);
    maxpool_backward(in, 2, g, &din);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&in});
      return dot(maxpool(in, 2), g);
    };
    return finite_diff_check(f, concat_vals({&in}), concat_vals({&din}), eps);
  }});

  cases.push_back({"fully_connected", 1e-6, [seed](double eps) {
    Rng rng(seed + 14);
    Tensor in = gaussian_tensor({7}, rng);
    Tensor w = gaussian_tensor({7, 4}, rng, 0.0, 0.5);
    Tensor b = gaussian_tensor({4}, rng);
    const Tensor g = gaussian_tensor({4}, rng);
    Tensor din(in.shape), dw(w.shape), db(b.shape);
    fully_connected_backward(in, w, g, &din, &dw, &db);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&in, &w, &b});
      return dot(fully_connected(in, w, b), g);
    };
    return finite_diff_check(f, concat_vals({&in, &w, &b}),
                             concat_vals({&din, &dw, &db}), eps);
  }});

  cases.push_back({"softmax_cross_entropy", 1e-6, [seed](double eps) {
    Rng rng(seed + 15);
    Tensor logits = gaussian_tensor({7}, rng);
    const Tensor dlogits = softmax_cross_entropy_backward(logits, 3);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&logits});
      return softmax_cross_entropy(logits, 3);
    };
    return finite_diff_check(f, concat_vals({&logits}), concat_vals({&dlogits}), eps);
  }});

  cases.push_back({"shape_decode", 1e-6, [seed](double eps) {
    Rng rng(seed + 16);
    ShapeModel model = ShapeModel::init(3, 4, 3, rng);
    Tensor alpha = gaussian_tensor({3}, rng, 0.0, 0.5);
    const Tensor g = gaussian_tensor({2, 12}, rng);
    std::vector<double> da;
    Tensor dbasis(model.basis.shape), dmean(model.mean.shape);
    shape_decode_backward(model, alpha.data, g, &da, &dbasis, &dmean);
    const Tensor da_t({3}, da);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&alpha, &model.basis, &model.mean});
      return dot(shape_decode(model, alpha.data), g);
    };
    return finite_diff_check(f, concat_vals({&alpha, &model.basis, &model.mean}),
                             concat_vals({&da_t, &dbasis, &dmean}), eps);
  }});

  cases.push_back({"exp_scale", 1e-6, [seed](double eps) {
    (void)seed;
    const double logs = 0.37;
    auto f = [&](const std::vector<double>& x) { return exp_scale(x[0]); };
    return finite_diff_check(f, {logs}, {exp_scale_backward(logs, 1.0)}, eps);
  }});

  cases.push_back({"apply_scale", 1e-6, [seed](double eps) {
    Rng rng(seed + 17);
    Tensor x_pts = gaussian_tensor({2, 5}, rng);
    Tensor s_t({1}, {1.3});
    const Tensor g = gaussian_tensor({2, 5}, rng);
    double ds = 0.0;
    Tensor dx(x_pts.shape);
    apply_scale_backward(s_t[0], x_pts, g, &ds, &dx);
    const Tensor ds_t({1}, {ds});
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&s_t, &x_pts});
      return dot(apply_scale(s_t[0], x_pts), g);
    };
    return finite_diff_check(f, concat_vals({&s_t, &x_pts}),
                             concat_vals({&ds_t, &dx}), eps);
  }});

  cases.push_back({"rotation", 1e-6, [seed, fault_rotation_sign](double eps) {
    Rng rng(seed + 18);
    Tensor phi_t({1}, {0.6});
    Tensor x_pts = gaussian_tensor({2, 5}, rng);
    const Tensor g = gaussian_tensor({2, 5}, rng);
    Tensor dr({2, 2}), dx(x_pts.shape);
    apply_rotation_backward(rotation_matrix(phi_t[0]), x_pts, g, &dr, &dx);
    double dphi = rotation_matrix_backward(phi_t[0], dr);
    if (fault_rotation_sign) dphi = -dphi;
    const Tensor dphi_t({1}, {dphi});
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&phi_t, &x_pts});
      return dot(apply_rotation(rotation_matrix(phi_t[0]), x_pts), g);
    };
    return finite_diff_check(f, concat_vals({&phi_t, &x_pts}),
                             concat_vals({&dphi_t, &dx}), eps);
  }});

  cases.push_back({"translation", 1e-6, [seed](double eps) {
    Rng rng(seed + 19);
    Tensor t_t({2}, {0.1, -0.2});
    Tensor x_pts = gaussian_tensor({2, 6}, rng);
    const Tensor g = gaussian_tensor({2, 6}, rng);
    double dtx = 0.0, dty = 0.0;
    Tensor dx(x_pts.shape);
    apply_translation_backward(g, &dtx, &dty, &dx);
    const Tensor dt_t({2}, {dtx, dty});
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&t_t, &x_pts});
      return dot(apply_translation(t_t[0], t_t[1], x_pts), g);
    };
    return finite_diff_check(f, concat_vals({&t_t, &x_pts}),
                             concat_vals({&dt_t, &dx}), eps);
  }});

  cases.push_back({"grid_generate", 1e-6, [seed](double eps) {
    Rng rng(seed + 20);
    ShapeModel model = ShapeModel::init(3, 3, 2, rng);
    PoseParams pose;
    pose.phi = 0.3;
    pose.tx = 0.1;
    pose.ty = -0.15;
    pose.logs = 0.2;
    pose.alpha = {0.25, -0.4};
    const Tensor g = gaussian_tensor({2, 9}, rng);
    const GridTrace trace = grid_generate(model, pose);
    Tensor dbasis(model.basis.shape), dmean(model.mean.shape);
    const PoseGrad pg = grid_generate_backward(model, pose, trace, g, &dbasis, &dmean);
    const Tensor dtheta = pg.to_vector();
    Tensor theta = pose.to_vector();
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&theta, &model.basis, &model.mean});
      const PoseParams p = PoseParams::from_vector(theta, 2);
      return dot(grid_generate(model, p).Y, g);
    };
    return finite_diff_check(f, concat_vals({&theta, &model.basis, &model.mean}),
                             concat_vals({&dtheta, &dbasis, &dmean}), eps);
  }});

  cases.push_back({"upsample_grid", 1e-6, [seed](double eps) {
    Rng rng(seed + 21);
    const UpsampleWeights w = precompute_upsample_weights(3, 3, 7, 6);
    Tensor y = regular_grid(3, 3);
    axpy(y, 0.1, gaussian_tensor(y.shape, rng));
    const Tensor g = gaussian_tensor({2, 42}, rng);
    Tensor dy(y.shape);
    upsample_grid_backward(w, g, &dy);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&y});
      return dot(upsample_grid(y, w), g);
    };
    return finite_diff_check(f, concat_vals({&y}), concat_vals({&dy}), eps);
  }});

  cases.push_back({"bilinear_sample", 1e-4, [seed](double eps) {
    Rng rng(seed + 22);
    Tensor image = gaussian_tensor({7, 6, 2}, rng, 0.5, 0.25);
    Tensor grid = safe_sample_grid(10, 7, 6, rng);
    const Tensor g = gaussian_tensor({10, 2}, rng);
    Tensor dimage(image.shape), dgrid(grid.shape);
    bilinear_sample_backward(image, grid, g, &dimage, &dgrid);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&image, &grid});
      return dot(bilinear_sample(image, grid), g);
    };
    return finite_diff_check(f, concat_vals({&image, &grid}),
                             concat_vals({&dimage, &dgrid}), eps);
  }});

  cases.push_back({"texture_loss", 1e-6, [seed](double eps) {
    Rng rng(seed + 23);
    AppearanceModel model = AppearanceModel::init(24, 3, rng);
    Tensor v = gaussian_tensor({24}, rng, 0.5, 0.3);
    Tensor dv(v.shape), dmean(model.mean.shape), dbasis(model.basis.shape);
    texture_loss_backward(model, v, &dv, &dmean, &dbasis);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&v, &model.mean, &model.basis});
      return texture_loss(model, v);
    };
    return finite_diff_check(f, concat_vals({&v, &model.mean, &model.basis}),
                             concat_vals({&dv, &dmean, &dbasis}), eps);
  }});

  cases.push_back({"symmetry_loss", 1e-6, [seed](double eps) {
    Rng rng(seed + 24);
    Tensor v = gaussian_tensor({12, 2}, rng);
    Tensor dv(v.shape);
    symmetry_loss_backward(v, 3, 4, &dv);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&v});
      return symmetry_loss(v, 3, 4);
    };
    return finite_diff_check(f, concat_vals({&v}), concat_vals({&dv}), eps);
  }});

  cases.push_back({"area_loss", 1e-6, [seed](double eps) {
    (void)seed;
    const Triangulation tri = Triangulation::regular(3, 3);
    Tensor y = regular_grid(3, 3);
    y(0, 4) += 1.4;  // drags the centre point far enough to flip triangles
    y(1, 4) += 0.9;
    const double k = 1.2;
    Tensor dy(y.shape);
    area_loss_backward(y, tri, k, &dy);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, {&y});
      return area_loss(y, tri, k);
    };
    return finite_diff_check(f, concat_vals({&y}), concat_vals({&dy}), eps);
  }});

  cases.push_back({"localiser_stack", 1e-4, [seed](double eps) {
    Rng rng(seed + 25);
    LayerStack stack = LayerStack::build(
        {LayerSpec::conv(3, 3, 2, 1), LayerSpec::relu(), LayerSpec::fc(5)},
        {6, 6, 1}, rng);
    Tensor in = gaussian_tensor({6, 6, 1}, rng);
    const Tensor g = gaussian_tensor({5}, rng);
    std::vector<Tensor> acts;
    stack.forward(in, &acts);
    std::vector<Tensor> grads = stack.make_grad_buffer();
    const Tensor din = stack.backward(acts, g, grads);
    std::vector<Tensor*> parts{&in};
    for (auto& p : stack.params) parts.push_back(&p.value);
    std::vector<const Tensor*> gparts{&din};
    for (auto& t : grads) gparts.push_back(&t);
    auto f = [&](const std::vector<double>& x) {
      scatter_vals(x, parts);
      return dot(stack.forward(in), g);
    };
    std::vector<const Tensor*> cparts(parts.begin(), parts.end());
    return finite_diff_check(f, concat_vals(cparts), concat_vals(gparts), eps);
  }});

  cases.push_back({"statn_end_to_end", 1e-4, [seed](double eps) {
    Rng rng(seed + 26);
    ModelConfig mc;
    mc.image_rows = 8;
    mc.image_cols = 8;
    mc.channels = 1;
    mc.grid_rows = 3;
    mc.grid_cols = 3;
    mc.sample_rows = 5;
    mc.sample_cols = 5;
    mc.shape_dim = 2;
    mc.texture_dim = 2;
    mc.class_count = 3;
    mc.localiser_body = {LayerSpec::fc(8), LayerSpec::relu()};
    mc.classifier_body = {LayerSpec::fc(6), LayerSpec::relu()};
    auto model = std::make_shared<StaTNModel>(build_model(mc, rng));
    // nudge the regression head so the pose is generic (keeps sample points
    // off exact pixel centres, where the kernel is kinked)
    for (std::size_t i = model->localiser.params.size() - 2;
         i < model->localiser.params.size(); ++i)
      for (double& v : model->localiser.params[i].value.data)
        v = rng.gaussian(0.0, 0.05);
    const Tensor image = gaussian_tensor({8, 8, 1}, rng, 0.5, 0.2);
    const int label = 1;
    TrainConfig tc;
    tc.w_class = 0.8;
    tc.w_tex = 1.0;
    tc.w_sym = 0.5;
    tc.w_area = 0.4;
    tc.area_k = 0.55;
    GradAccum acc = GradAccum::zeros_like(*model);
    item_backward(*model, image, label, tc, acc);
    const auto parts = model_param_values(*model);
    const auto gparts =
        accum_parts(acc, model->has_appearance(), model->classifier.params.size());
    auto f = [model, image, label, tc, parts](const std::vector<double>& x) {
      scatter_vals(x, parts);
      return item_loss(*model, image, label, tc);
    };
    const std::vector<const Tensor*> cparts(parts.begin(), parts.end());
    return finite_diff_check(f, concat_vals(cparts), concat_vals(gparts), eps);
  }});

  return cases;
}

}  // namespace statn
