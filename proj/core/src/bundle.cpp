#include "snapfit/bundle.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace snapfit {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json matrix_rows_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r)));
  return out;
}

Eigen::MatrixXd matrix_rows_from_json(const json& j, Eigen::Index cols_hint = 0) {
  if (j.empty()) return Eigen::MatrixXd(0, cols_hint);
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

json fpca_to_json(const FpcaModel& model) {
  json cols = json::array();
  for (Eigen::Index a = 0; a < model.eigenfunctions.cols(); ++a) {
    cols.push_back(vector_to_json(model.eigenfunctions.col(a)));
  }
  return {{"grid_T", model.grid_T},
          {"sample_period", model.sample_period},
          {"mean_curve", vector_to_json(model.mean_curve)},
          {"eigenfunctions", cols},
          {"eigenvalues", vector_to_json(model.eigenvalues)},
          {"total_variance", model.total_variance}};
}

FpcaModel fpca_from_json(const json& j) {
  FpcaModel model;
  model.grid_T = j.at("grid_T").get<int>();
  model.sample_period = j.at("sample_period").get<double>();
  model.mean_curve = vector_from_json(j.at("mean_curve"));
  const json& cols = j.at("eigenfunctions");
  model.eigenfunctions.resize(model.grid_T, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < cols.size(); ++a) {
    model.eigenfunctions.col(static_cast<Eigen::Index>(a)) = vector_from_json(cols[a]);
  }
  model.eigenvalues = vector_from_json(j.at("eigenvalues"));
  model.total_variance = j.at("total_variance").get<double>();
  return model;
}

const char* kernel_kind_name(KernelKind kind) {
  return kind == KernelKind::rbf ? "rbf" : "linear";
}

KernelKind kernel_kind_from_name(const std::string& name) {
  if (name == "rbf") return KernelKind::rbf;
  if (name == "linear") return KernelKind::linear;
  throw DataError("unknown kernel kind: " + name);
}

json svm_to_json(const SvmModel& model) {
  return {{"kernel", {{"kind", kernel_kind_name(model.kernel.kind)}, {"gamma", model.kernel.gamma}}},
          {"support_vectors", matrix_rows_to_json(model.support_vectors)},
          {"dual_coefs", vector_to_json(model.dual_coefs)},
          {"bias", model.bias},
          {"platt", {{"a", model.platt_a}, {"b", model.platt_b}}},
          {"c", model.regularization_c},
          {"standardization",
           {{"mean", vector_to_json(model.feature_mean)},
            {"scale", vector_to_json(model.feature_scale)}}}};
}

SvmModel svm_from_json(const json& j) {
  SvmModel model;
  model.kernel.kind = kernel_kind_from_name(j.at("kernel").at("kind").get<std::string>());
  model.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  model.feature_mean = vector_from_json(j.at("standardization").at("mean"));
  model.feature_scale = vector_from_json(j.at("standardization").at("scale"));
  model.support_vectors = matrix_rows_from_json(j.at("support_vectors"), model.feature_mean.size());
  model.dual_coefs = vector_from_json(j.at("dual_coefs"));
  model.bias = j.at("bias").get<double>();
  model.platt_a = j.at("platt").at("a").get<double>();
  model.platt_b = j.at("platt").at("b").get<double>();
  model.calibrated = true;
  model.regularization_c = j.at("c").get<double>();
  return model;
}

json state_set_to_json(StateSet set) {
  json out = json::array();
  for (StateLabel l : set.labels()) out.push_back(state_name(l));
  return out;
}

StateSet state_set_from_json(const json& j) {
  StateSet set;
  for (const json& name : j) set.insert(state_from_name(name.get<std::string>()));
  return set;
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& node : tree.nodes) {
    json item = {{"id", node.node_id}, {"patterns", state_set_to_json(node.pattern_ids)}};
    if (node.is_leaf()) {
      item["children"] = nullptr;
    } else {
      item["children"] = {node.child_pos, node.child_neg};
      item["component"] = node.component;
      item["partition"] = state_set_to_json(node.partition);
      item["accuracy"] = node.accuracy;
      item["svm"] = svm_to_json(*node.svm);
    }
    nodes.push_back(std::move(item));
  }
  json fpca = json::array();
  for (const FpcaModel& model : tree.fpca_models) fpca.push_back(fpca_to_json(model));
  return {{"phase", phase_name(tree.phase)},
          {"t_span", tree.t_span},
          {"fpca_models", fpca},
          {"nodes", nodes}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree tree;
  tree.phase = phase_from_name(j.at("phase").get<std::string>());
  tree.t_span = j.at("t_span").get<double>();
  const json& fpca = j.at("fpca_models");
  if (fpca.size() != kChannelCount) throw DataError("tree needs 6 fpca models");
  for (int c = 0; c < kChannelCount; ++c) tree.fpca_models[c] = fpca_from_json(fpca[c]);
  for (const json& item : j.at("nodes")) {
    TreeNode node;
    node.node_id = item.at("id").get<int>();
    node.pattern_ids = state_set_from_json(item.at("patterns"));
    if (!item.at("children").is_null()) {
      node.child_pos = item["children"][0].get<int>();
      node.child_neg = item["children"][1].get<int>();
      node.component = item.at("component").get<int>();
      node.partition = state_set_from_json(item.at("partition"));
      node.accuracy = item.at("accuracy").get<double>();
      node.svm = svm_from_json(item.at("svm"));
    }
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

}  // namespace

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  const json doc = {{"format_version", bundle.format_version},
                    {"t_span", bundle.t_span},
                    {"training_config",
                     {{"fpca_components", bundle.fpca_components},
                      {"svm_c", bundle.svm_c},
                      {"kernel", {{"kind", kernel_kind_name(bundle.kernel.kind)},
                                  {"gamma", bundle.kernel.gamma}}},
                      {"eq1_corrected", bundle.eq1_corrected}}},
                    {"phases",
                     {{"assembly", tree_to_json(bundle.trees.assembly)},
                      {"probe_plus_x", tree_to_json(bundle.trees.probe_plus_x)},
                      {"probe_minus_x", tree_to_json(bundle.trees.probe_minus_x)}}}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model bundle: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("model bundle write failed: " + path);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model bundle: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("malformed model bundle " + path + ": " + e.what());
  }
  ModelBundle bundle;
  try {
    bundle.format_version = doc.at("format_version").get<int>();
    if (bundle.format_version != kBundleFormatVersion) {
      throw DataError("unsupported bundle format_version " +
                      std::to_string(bundle.format_version));
    }
    bundle.t_span = doc.at("t_span").get<double>();
    const json& cfg = doc.at("training_config");
    bundle.fpca_components = cfg.at("fpca_components").get<int>();
    bundle.svm_c = cfg.at("svm_c").get<double>();
    bundle.kernel.kind = kernel_kind_from_name(cfg.at("kernel").at("kind").get<std::string>());
    bundle.kernel.gamma = cfg.at("kernel").at("gamma").get<double>();
    bundle.eq1_corrected = cfg.at("eq1_corrected").get<bool>();
    const json& phases = doc.at("phases");
    bundle.trees.assembly = tree_from_json(phases.at("assembly"));
    bundle.trees.probe_plus_x = tree_from_json(phases.at("probe_plus_x"));
    bundle.trees.probe_minus_x = tree_from_json(phases.at("probe_minus_x"));
  } catch (const json::exception& e) {
    throw DataError("malformed model bundle " + path + ": " + e.what());
  }
  return bundle;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for hashing: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a_hex(buffer.str());
}

}  // namespace snapfit
