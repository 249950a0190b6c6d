#include "core/sas_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pcrec {

namespace {
constexpr double kLnEps = 1e-8;

using Row = std::vector<double>;
using Grid = std::vector<Row>;  // t rows of d (or t) doubles

Grid make_grid(int rows, int cols) {
  return Grid(static_cast<size_t>(rows), Row(static_cast<size_t>(cols), 0.0));
}

void zero_grid(Grid& g) {
  for (auto& r : g) std::fill(r.begin(), r.end(), 0.0);
}

}  // namespace

template <class T>
struct SasModel<T>::BlockWork {
  Grid xin, a, q, k, v, p, att, xmid, f, hpre;
  Grid drop_att, drop_ffn;  // inverted-dropout scale factors
  Row mean1, rstd1, mean2, rstd2;
};

template <class T>
struct SasModel<T>::Work {
  Grid x0, x, drop0;
  std::vector<BlockWork> blocks;
  std::vector<char> pad;

  void resize(int t, int d, int nblocks) {
    x0 = make_grid(t, d);
    x = make_grid(t, d);
    drop0 = make_grid(t, d);
    pad.assign(static_cast<size_t>(t), 0);
    blocks.resize(static_cast<size_t>(nblocks));
    for (auto& b : blocks) {
      b.xin = make_grid(t, d);
      b.a = make_grid(t, d);
      b.q = make_grid(t, d);
      b.k = make_grid(t, d);
      b.v = make_grid(t, d);
      b.p = make_grid(t, t);
      b.att = make_grid(t, d);
      b.xmid = make_grid(t, d);
      b.f = make_grid(t, d);
      b.hpre = make_grid(t, d);
      b.drop_att = make_grid(t, d);
      b.drop_ffn = make_grid(t, d);
      b.mean1.assign(static_cast<size_t>(t), 0.0);
      b.rstd1.assign(static_cast<size_t>(t), 0.0);
      b.mean2.assign(static_cast<size_t>(t), 0.0);
      b.rstd2.assign(static_cast<size_t>(t), 0.0);
    }
  }
};

template <class T>
int SasModel<T>::gi(int block, const char* part) const {
  // Fixed layout: 2 embedding groups then 6 groups per block.
  static const char* parts[] = {"attn.q", "attn.k", "attn.v", "attn.out",
                                "ffn.w1", "ffn.w2"};
  for (int p = 0; p < 6; ++p) {
    if (std::strcmp(parts[p], part) == 0) return 2 + block * 6 + p;
  }
  config_error(std::string("unknown block part ") + part);
}

template <class T>
SasModel<T>::SasModel(const Dataset& ds, const HyperParams& hp, RngStream& init_rng)
    : hp_(hp) {
  hp_.validate();
  const int d = hp_.dim;
  const int t = hp_.seq_len;

  LayerGroup<T> item_emb;
  item_emb.name = "item_emb";
  item_emb.role = LayerRole::Embedding;
  item_emb.weights = Mat<T>(ds.num_items + 1, d);
  fill_uniform(item_emb.weights.flat(), init_rng, -0.01, 0.01);
  for (int c = 0; c < d; ++c) item_emb.weights.at(0, c) = T(0);
  params_.groups.push_back(std::move(item_emb));

  LayerGroup<T> pos_emb;
  pos_emb.name = "pos_emb";
  pos_emb.role = LayerRole::Embedding;
  pos_emb.weights = Mat<T>(t, d);
  fill_uniform(pos_emb.weights.flat(), init_rng, -0.01, 0.01);
  params_.groups.push_back(std::move(pos_emb));

  for (int b = 0; b < hp_.blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    auto proj = [&](const char* part, bool with_bias, bool with_norm) {
      LayerGroup<T> g;
      g.name = prefix + part;
      g.role = LayerRole::Middle;
      g.weights = Mat<T>(d, d);
      fill_xavier(g.weights, init_rng);
      if (with_bias) g.bias.assign(static_cast<size_t>(d), T(0));
      if (with_norm) {
        g.norm_gain.assign(static_cast<size_t>(d), T(1));
        g.norm_shift.assign(static_cast<size_t>(d), T(0));
      }
      params_.groups.push_back(std::move(g));
    };
    proj("attn.q", false, false);
    proj("attn.k", false, false);
    proj("attn.v", false, false);
    proj("attn.out", true, true);  // norm params = pre-attention layer norm
    proj("ffn.w1", true, false);
    proj("ffn.w2", true, true);  // norm params = pre-ffn layer norm
  }

  grad_buf_ = clone_shape(params_);

  // Training chunks come from the shifted (input -> next item) pairs so a
  // position is supervised exactly when its input is a real item.
  for (const auto& items : ds.train) {
    if (items.size() < 2) continue;
    const size_t n = items.size() - 1;
    size_t pos = 0;
    while (pos < n) {
      const size_t take = std::min(n - pos, static_cast<size_t>(t));
      std::vector<int> in(static_cast<size_t>(t), 0);
      std::vector<int> tg(static_cast<size_t>(t), 0);
      for (size_t j = 0; j < take; ++j) {
        in[static_cast<size_t>(t) - take + j] = items[pos + j];
        tg[static_cast<size_t>(t) - take + j] = items[pos + j + 1];
      }
      chunks_.emplace_back(std::move(in), std::move(tg));
      pos += take;
    }
  }
}

template <class T>
typename SasModel<T>::Batch SasModel<T>::make_batch(const Dataset& ds,
                                                    std::span<const uint32_t> idx,
                                                    RngStream& neg_rng) const {
  Batch batch;
  batch.reserve(idx.size());
  for (uint32_t i : idx) {
    Sequence s;
    s.in = chunks_[i].first;
    s.tg = chunks_[i].second;
    s.ng.assign(s.in.size(), 0);
    for (size_t j = 0; j < s.in.size(); ++j) {
      if (s.tg[j] == 0) continue;
      // Uniform over non-target items without rejection.
      int cand = 1 + static_cast<int>(
                     neg_rng.next_below(static_cast<uint32_t>(ds.num_items - 1)));
      if (cand >= s.tg[j]) ++cand;
      s.ng[j] = cand;
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

template <class T>
void SasModel<T>::forward_sequence(const std::vector<int>& in, Work& w,
                                   bool use_dropout, RngStream* drop_rng) const {
  const int d = hp_.dim;
  const int t = hp_.seq_len;
  const double keep = 1.0 - hp_.dropout;
  const Mat<T>& emb = params_.groups[0].weights;
  const Mat<T>& pos = params_.groups[1].weights;

  auto draw_mask = [&](Grid& mask, int j) {
    for (int c = 0; c < d; ++c) {
      mask[j][c] = (drop_rng->next_double() < hp_.dropout) ? 0.0 : 1.0 / keep;
    }
  };
  const bool dropping = use_dropout && hp_.dropout > 0.0;

  for (int j = 0; j < t; ++j) {
    w.pad[static_cast<size_t>(j)] = in[static_cast<size_t>(j)] == 0 ? 1 : 0;
    std::fill(w.x0[j].begin(), w.x0[j].end(), 0.0);
    std::fill(w.drop0[j].begin(), w.drop0[j].end(), 1.0);
    if (w.pad[static_cast<size_t>(j)]) continue;
    const T* er = emb.row(in[static_cast<size_t>(j)]);
    const T* pr = pos.row(j);
    if (dropping) draw_mask(w.drop0, j);
    for (int c = 0; c < d; ++c) {
      w.x0[j][c] = (static_cast<double>(er[c]) + static_cast<double>(pr[c])) * w.drop0[j][c];
    }
  }
  w.x = w.x0;

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  for (int b = 0; b < hp_.blocks; ++b) {
    BlockWork& bw = w.blocks[static_cast<size_t>(b)];
    const Mat<T>& wq = params_.groups[static_cast<size_t>(gi(b, "attn.q"))].weights;
    const Mat<T>& wk = params_.groups[static_cast<size_t>(gi(b, "attn.k"))].weights;
    const Mat<T>& wv = params_.groups[static_cast<size_t>(gi(b, "attn.v"))].weights;
    const auto& gout = params_.groups[static_cast<size_t>(gi(b, "attn.out"))];
    const auto& gff1 = params_.groups[static_cast<size_t>(gi(b, "ffn.w1"))];
    const auto& gff2 = params_.groups[static_cast<size_t>(gi(b, "ffn.w2"))];

    bw.xin = w.x;
    // Pre-attention layer norm.
    for (int j = 0; j < t; ++j) {
      std::fill(bw.a[j].begin(), bw.a[j].end(), 0.0);
      std::fill(bw.q[j].begin(), bw.q[j].end(), 0.0);
      std::fill(bw.k[j].begin(), bw.k[j].end(), 0.0);
      std::fill(bw.v[j].begin(), bw.v[j].end(), 0.0);
      if (w.pad[static_cast<size_t>(j)]) continue;
      double mean = 0.0;
      for (int c = 0; c < d; ++c) mean += bw.xin[j][c];
      mean /= d;
      double var = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dx = bw.xin[j][c] - mean;
        var += dx * dx;
      }
      var /= d;
      const double rstd = 1.0 / std::sqrt(var + kLnEps);
      bw.mean1[static_cast<size_t>(j)] = mean;
      bw.rstd1[static_cast<size_t>(j)] = rstd;
      for (int c = 0; c < d; ++c) {
        const double xhat = (bw.xin[j][c] - mean) * rstd;
        bw.a[j][c] = static_cast<double>(gout.norm_gain[static_cast<size_t>(c)]) * xhat +
                     static_cast<double>(gout.norm_shift[static_cast<size_t>(c)]);
      }
      for (int o = 0; o < d; ++o) {
        double aq = 0.0, ak = 0.0, av = 0.0;
        for (int i = 0; i < d; ++i) {
          const double ai = bw.a[j][i];
          aq += ai * static_cast<double>(wq.at(i, o));
          ak += ai * static_cast<double>(wk.at(i, o));
          av += ai * static_cast<double>(wv.at(i, o));
        }
        bw.q[j][o] = aq;
        bw.k[j][o] = ak;
        bw.v[j][o] = av;
      }
    }
    // Causal attention over non-pad keys.
    for (int j = 0; j < t; ++j) {
      std::fill(bw.p[j].begin(), bw.p[j].end(), 0.0);
      std::fill(bw.att[j].begin(), bw.att[j].end(), 0.0);
      if (w.pad[static_cast<size_t>(j)]) continue;
      double max_e = -1e300;
      for (int u = 0; u <= j; ++u) {
        if (w.pad[static_cast<size_t>(u)]) continue;
        double e = 0.0;
        for (int c = 0; c < d; ++c) e += bw.q[j][c] * bw.k[u][c];
        e *= inv_sqrt_d;
        bw.p[j][u] = e;
        max_e = std::max(max_e, e);
      }
      double z = 0.0;
      for (int u = 0; u <= j; ++u) {
        if (w.pad[static_cast<size_t>(u)]) continue;
        bw.p[j][u] = std::exp(bw.p[j][u] - max_e);
        z += bw.p[j][u];
      }
      for (int u = 0; u <= j; ++u) {
        if (w.pad[static_cast<size_t>(u)]) continue;
        bw.p[j][u] /= z;
        const double pju = bw.p[j][u];
        for (int c = 0; c < d; ++c) bw.att[j][c] += pju * bw.v[u][c];
      }
    }
    // Output projection, dropout, residual.
    for (int j = 0; j < t; ++j) {
      std::fill(bw.drop_att[j].begin(), bw.drop_att[j].end(), 1.0);
      if (w.pad[static_cast<size_t>(j)]) {
        std::fill(bw.xmid[j].begin(), bw.xmid[j].end(), 0.0);
        continue;
      }
      if (dropping) draw_mask(bw.drop_att, j);
      for (int o = 0; o < d; ++o) {
        double acc = static_cast<double>(gout.bias[static_cast<size_t>(o)]);
        for (int i = 0; i < d; ++i) {
          acc += bw.att[j][i] * static_cast<double>(gout.weights.at(i, o));
        }
        bw.xmid[j][o] = bw.xin[j][o] + acc * bw.drop_att[j][o];
      }
    }
    // Pre-ffn layer norm, feed forward, dropout, residual.
    for (int j = 0; j < t; ++j) {
      std::fill(bw.f[j].begin(), bw.f[j].end(), 0.0);
      std::fill(bw.hpre[j].begin(), bw.hpre[j].end(), 0.0);
      std::fill(bw.drop_ffn[j].begin(), bw.drop_ffn[j].end(), 1.0);
      if (w.pad[static_cast<size_t>(j)]) {
        std::fill(w.x[j].begin(), w.x[j].end(), 0.0);
        continue;
      }
      double mean = 0.0;
      for (int c = 0; c < d; ++c) mean += bw.xmid[j][c];
      mean /= d;
      double var = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dx = bw.xmid[j][c] - mean;
        var += dx * dx;
      }
      var /= d;
      const double rstd = 1.0 / std::sqrt(var + kLnEps);
      bw.mean2[static_cast<size_t>(j)] = mean;
      bw.rstd2[static_cast<size_t>(j)] = rstd;
      for (int c = 0; c < d; ++c) {
        const double xhat = (bw.xmid[j][c] - mean) * rstd;
        bw.f[j][c] = static_cast<double>(gff2.norm_gain[static_cast<size_t>(c)]) * xhat +
                     static_cast<double>(gff2.norm_shift[static_cast<size_t>(c)]);
      }
      for (int o = 0; o < d; ++o) {
        double acc = static_cast<double>(gff1.bias[static_cast<size_t>(o)]);
        for (int i = 0; i < d; ++i) {
          acc += bw.f[j][i] * static_cast<double>(gff1.weights.at(i, o));
        }
        bw.hpre[j][o] = acc;
      }
      if (dropping) draw_mask(bw.drop_ffn, j);
      for (int o = 0; o < d; ++o) {
        double acc = static_cast<double>(gff2.bias[static_cast<size_t>(o)]);
        for (int i = 0; i < d; ++i) {
          const double h = bw.hpre[j][i] > 0 ? bw.hpre[j][i] : 0.0;
          acc += h * static_cast<double>(gff2.weights.at(i, o));
        }
        w.x[j][o] = bw.xmid[j][o] + acc * bw.drop_ffn[j][o];
      }
    }
  }
}

template <class T>
double SasModel<T>::forward_backward(const Dataset& ds, const Batch& batch,
                                     ParamSet<T>* grads, bool use_dropout,
                                     RngStream* drop_rng) const {
  (void)ds;
  const int d = hp_.dim;
  const int t = hp_.seq_len;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const Mat<T>& emb = params_.groups[0].weights;

  Work w;
  w.resize(t, d, hp_.blocks);
  Grid dx = make_grid(t, d);
  Grid dxmid = make_grid(t, d);
  Grid dq = make_grid(t, d);
  Grid dk = make_grid(t, d);
  Grid dv = make_grid(t, d);
  Grid datt = make_grid(t, d);
  Row dp(static_cast<size_t>(t), 0.0);
  Row dh(static_cast<size_t>(d), 0.0);
  Row df(static_cast<size_t>(d), 0.0);
  Row da(static_cast<size_t>(d), 0.0);

  double total = 0.0;
  for (const Sequence& s : batch) {
    bool any = false;
    for (int id : s.in) any = any || id != 0;
    if (!any) continue;  // all-pad sequence

    forward_sequence(s.in, w, use_dropout, drop_rng);

    zero_grid(dx);
    for (int j = 0; j < t; ++j) {
      if (s.tg[static_cast<size_t>(j)] == 0) continue;
      const int pos_item = s.tg[static_cast<size_t>(j)];
      const int neg_item = s.ng[static_cast<size_t>(j)];
      const T* pe = emb.row(pos_item);
      const T* ne = emb.row(neg_item);
      double rp = 0.0, rn = 0.0;
      for (int c = 0; c < d; ++c) {
        rp += w.x[j][c] * static_cast<double>(pe[c]);
        rn += w.x[j][c] * static_cast<double>(ne[c]);
      }
      total += softplus_neg(rp) + softplus_neg(-rn);
      if (!grads) continue;
      const double drp = -stable_sigmoid(-rp);
      const double drn = stable_sigmoid(rn);
      Mat<T>& gemb = grads->groups[0].weights;
      T* gpe = gemb.row(pos_item);
      T* gne = gemb.row(neg_item);
      for (int c = 0; c < d; ++c) {
        dx[j][c] += drp * static_cast<double>(pe[c]) + drn * static_cast<double>(ne[c]);
        gpe[c] += static_cast<T>(drp * w.x[j][c]);
        gne[c] += static_cast<T>(drn * w.x[j][c]);
      }
    }
    if (!grads) continue;

    for (int b = hp_.blocks - 1; b >= 0; --b) {
      BlockWork& bw = w.blocks[static_cast<size_t>(b)];
      const Mat<T>& wq = params_.groups[static_cast<size_t>(gi(b, "attn.q"))].weights;
      const Mat<T>& wk = params_.groups[static_cast<size_t>(gi(b, "attn.k"))].weights;
      const Mat<T>& wv = params_.groups[static_cast<size_t>(gi(b, "attn.v"))].weights;
      const auto& gout = params_.groups[static_cast<size_t>(gi(b, "attn.out"))];
      const auto& gff1 = params_.groups[static_cast<size_t>(gi(b, "ffn.w1"))];
      const auto& gff2 = params_.groups[static_cast<size_t>(gi(b, "ffn.w2"))];
      auto& ggq = grads->groups[static_cast<size_t>(gi(b, "attn.q"))];
      auto& ggk = grads->groups[static_cast<size_t>(gi(b, "attn.k"))];
      auto& ggv = grads->groups[static_cast<size_t>(gi(b, "attn.v"))];
      auto& ggout = grads->groups[static_cast<size_t>(gi(b, "attn.out"))];
      auto& ggff1 = grads->groups[static_cast<size_t>(gi(b, "ffn.w1"))];
      auto& ggff2 = grads->groups[static_cast<size_t>(gi(b, "ffn.w2"))];

      // Feed-forward sublayer backward: x = xmid + drop * (W2 relu(W1 f + b1) + b2).
      zero_grid(dxmid);
      for (int j = 0; j < t; ++j) {
        if (w.pad[static_cast<size_t>(j)]) continue;
        for (int c = 0; c < d; ++c) dxmid[j][c] = dx[j][c];

        std::fill(dh.begin(), dh.end(), 0.0);
        for (int o = 0; o < d; ++o) {
          const double dy = dx[j][o] * bw.drop_ffn[j][o];
          if (dy == 0.0) continue;
          ggff2.bias[static_cast<size_t>(o)] += static_cast<T>(dy);
          for (int i = 0; i < d; ++i) {
            const double h = bw.hpre[j][i] > 0 ? bw.hpre[j][i] : 0.0;
            ggff2.weights.at(i, o) += static_cast<T>(dy * h);
            dh[static_cast<size_t>(i)] += dy * static_cast<double>(gff2.weights.at(i, o));
          }
        }
        std::fill(df.begin(), df.end(), 0.0);
        for (int o = 0; o < d; ++o) {
          if (bw.hpre[j][o] <= 0) continue;
          const double dpre = dh[static_cast<size_t>(o)];
          if (dpre == 0.0) continue;
          ggff1.bias[static_cast<size_t>(o)] += static_cast<T>(dpre);
          for (int i = 0; i < d; ++i) {
            ggff1.weights.at(i, o) += static_cast<T>(dpre * bw.f[j][i]);
            df[static_cast<size_t>(i)] += dpre * static_cast<double>(gff1.weights.at(i, o));
          }
        }
        // Layer-norm backward (pre-ffn norm, params on ffn.w2).
        const double mean = bw.mean2[static_cast<size_t>(j)];
        const double rstd = bw.rstd2[static_cast<size_t>(j)];
        double m1 = 0.0, m2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double xhat = (bw.xmid[j][c] - mean) * rstd;
          const double dxhat = df[static_cast<size_t>(c)] *
                               static_cast<double>(gff2.norm_gain[static_cast<size_t>(c)]);
          ggff2.norm_gain[static_cast<size_t>(c)] +=
              static_cast<T>(df[static_cast<size_t>(c)] * xhat);
          ggff2.norm_shift[static_cast<size_t>(c)] +=
              static_cast<T>(df[static_cast<size_t>(c)]);
          m1 += dxhat;
          m2 += dxhat * xhat;
        }
        m1 /= d;
        m2 /= d;
        for (int c = 0; c < d; ++c) {
          const double xhat = (bw.xmid[j][c] - mean) * rstd;
          const double dxhat = df[static_cast<size_t>(c)] *
                               static_cast<double>(gff2.norm_gain[static_cast<size_t>(c)]);
          dxmid[j][c] += rstd * (dxhat - m1 - xhat * m2);
        }
      }

      // Attention sublayer backward: xmid = xin + drop * (att Wo + bo).
      zero_grid(dx);
      zero_grid(dq);
      zero_grid(dk);
      zero_grid(dv);
      zero_grid(datt);
      for (int j = 0; j < t; ++j) {
        if (w.pad[static_cast<size_t>(j)]) continue;
        for (int c = 0; c < d; ++c) dx[j][c] = dxmid[j][c];  // residual into xin
        for (int o = 0; o < d; ++o) {
          const double do_ = dxmid[j][o] * bw.drop_att[j][o];
          if (do_ == 0.0) continue;
          ggout.bias[static_cast<size_t>(o)] += static_cast<T>(do_);
          for (int i = 0; i < d; ++i) {
            ggout.weights.at(i, o) += static_cast<T>(do_ * bw.att[j][i]);
            datt[j][i] += do_ * static_cast<double>(gout.weights.at(i, o));
          }
        }
      }
      for (int j = 0; j < t; ++j) {
        if (w.pad[static_cast<size_t>(j)]) continue;
        double sum_pdp = 0.0;
        for (int u = 0; u <= j; ++u) {
          if (w.pad[static_cast<size_t>(u)]) continue;
          double dpu = 0.0;
          for (int c = 0; c < d; ++c) {
            dpu += datt[j][c] * bw.v[u][c];
            dv[u][c] += bw.p[j][u] * datt[j][c];
          }
          dp[static_cast<size_t>(u)] = dpu;
          sum_pdp += bw.p[j][u] * dpu;
        }
        for (int u = 0; u <= j; ++u) {
          if (w.pad[static_cast<size_t>(u)]) continue;
          const double de = bw.p[j][u] * (dp[static_cast<size_t>(u)] - sum_pdp) * inv_sqrt_d;
          if (de == 0.0) continue;
          for (int c = 0; c < d; ++c) {
            dq[j][c] += de * bw.k[u][c];
            dk[u][c] += de * bw.q[j][c];
          }
        }
      }
      for (int j = 0; j < t; ++j) {
        if (w.pad[static_cast<size_t>(j)]) continue;
        std::fill(da.begin(), da.end(), 0.0);
        for (int o = 0; o < d; ++o) {
          const double dqo = dq[j][o];
          const double dko = dk[j][o];
          const double dvo = dv[j][o];
          for (int i = 0; i < d; ++i) {
            da[static_cast<size_t>(i)] += dqo * static_cast<double>(wq.at(i, o)) +
                                          dko * static_cast<double>(wk.at(i, o)) +
                                          dvo * static_cast<double>(wv.at(i, o));
            ggq.weights.at(i, o) += static_cast<T>(dqo * bw.a[j][i]);
            ggk.weights.at(i, o) += static_cast<T>(dko * bw.a[j][i]);
            ggv.weights.at(i, o) += static_cast<T>(dvo * bw.a[j][i]);
          }
        }
        // Layer-norm backward (pre-attention norm, params on attn.out).
        const double mean = bw.mean1[static_cast<size_t>(j)];
        const double rstd = bw.rstd1[static_cast<size_t>(j)];
        double m1 = 0.0, m2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double xhat = (bw.xin[j][c] - mean) * rstd;
          const double dxhat =
              da[static_cast<size_t>(c)] *
              static_cast<double>(gout.norm_gain[static_cast<size_t>(c)]);
          ggout.norm_gain[static_cast<size_t>(c)] +=
              static_cast<T>(da[static_cast<size_t>(c)] * xhat);
          ggout.norm_shift[static_cast<size_t>(c)] +=
              static_cast<T>(da[static_cast<size_t>(c)]);
          m1 += dxhat;
          m2 += dxhat * xhat;
        }
        m1 /= d;
        m2 /= d;
        for (int c = 0; c < d; ++c) {
          const double xhat = (bw.xin[j][c] - mean) * rstd;
          const double dxhat =
              da[static_cast<size_t>(c)] *
              static_cast<double>(gout.norm_gain[static_cast<size_t>(c)]);
          dx[j][c] += rstd * (dxhat - m1 - xhat * m2);
        }
      }
    }

    // Input embeddings.
    Mat<T>& gemb = grads->groups[0].weights;
    Mat<T>& gpos = grads->groups[1].weights;
    for (int j = 0; j < t; ++j) {
      if (w.pad[static_cast<size_t>(j)]) continue;
      T* ge = gemb.row(s.in[static_cast<size_t>(j)]);
      T* gp = gpos.row(j);
      for (int c = 0; c < d; ++c) {
        const double g = dx[j][c] * w.drop0[j][c];
        ge[c] += static_cast<T>(g);
        gp[c] += static_cast<T>(g);
      }
    }
  }

  if (hp_.l2 > 0) {
    double sq = 0.0;
    params_.for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> p) {
      for (T x : p) sq += static_cast<double>(x) * static_cast<double>(x);
    });
    total += hp_.l2 * sq;
    if (grads) {
      std::vector<std::span<const T>> psp;
      params_.for_each_tensor([&](const LayerGroup<T>&, TensorKind, std::span<const T> p) {
        psp.push_back(p);
      });
      size_t i = 0;
      grads->for_each_tensor([&](LayerGroup<T>&, TensorKind, std::span<T> g) {
        for (size_t e = 0; e < g.size(); ++e) {
          g[e] += static_cast<T>(2.0 * hp_.l2 * static_cast<double>(psp[i][e]));
        }
        ++i;
      });
    }
  }
  return total;
}

template <class T>
double SasModel<T>::loss(const Dataset& ds, const Batch& batch) const {
  return forward_backward(ds, batch, nullptr, /*use_dropout=*/false, nullptr);
}

template <class T>
void SasModel<T>::grad(const Dataset& ds, const Batch& batch, ParamSet<T>& grads) const {
  forward_backward(ds, batch, &grads, /*use_dropout=*/false, nullptr);
}

template <class T>
double SasModel<T>::train_batch(const Dataset& ds, const Batch& batch,
                                ParamOptimizer<T>& opt, RngStream& drop_rng) {
  grad_buf_.fill(T(0));
  const double loss =
      forward_backward(ds, batch, &grad_buf_, /*use_dropout=*/true, &drop_rng);
  opt.step(params_, grad_buf_);
  return loss;
}

template <class T>
std::vector<std::vector<double>> SasModel<T>::hidden_states(
    const std::vector<int>& inputs) const {
  if (static_cast<int>(inputs.size()) != hp_.seq_len) {
    config_error("hidden_states: input length must equal t");
  }
  Work w;
  w.resize(hp_.seq_len, hp_.dim, hp_.blocks);
  forward_sequence(inputs, w, /*use_dropout=*/false, nullptr);
  return w.x;
}

template <class T>
std::vector<T> SasModel<T>::score_items(const Dataset& ds, int user,
                                        bool include_valid) const {
  if (user < 0 || user >= ds.num_users) data_error("unknown user id");
  const int t = hp_.seq_len;
  const int d = hp_.dim;
  std::vector<int> context = ds.train[static_cast<size_t>(user)];
  if (include_valid) context.push_back(ds.valid[static_cast<size_t>(user)]);
  std::vector<int> in(static_cast<size_t>(t), 0);
  const size_t take = std::min(context.size(), static_cast<size_t>(t));
  std::copy(context.end() - static_cast<long>(take), context.end(),
            in.end() - static_cast<long>(take));

  const std::vector<std::vector<double>> states = hidden_states(in);
  const Row& h = states[static_cast<size_t>(t - 1)];
  const Mat<T>& emb = params_.groups[0].weights;
  std::vector<T> scores(static_cast<size_t>(ds.num_items));
  for (int item = 1; item <= ds.num_items; ++item) {
    const T* row = emb.row(item);
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += h[static_cast<size_t>(c)] * static_cast<double>(row[c]);
    scores[static_cast<size_t>(item - 1)] = static_cast<T>(s);
  }
  return scores;
}

template class SasModel<float>;
template class SasModel<double>;

}  // namespace pcrec
