#include <json.hpp>

#include "binary_io.hpp"
#include "catre/synthdata.hpp"
#include "json_codec.hpp"

namespace catre {

namespace {

constexpr char kRecordMagic[4] = {'C', 'A', 'T', 'R'};

void put_pose(detail::ByteWriter& w, const Pose9D& p) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) w.put(p.r.matrix()(r, c));
  }
  for (int c = 0; c < 3; ++c) w.put(p.t(c));
  for (int c = 0; c < 3; ++c) w.put(p.s(c));
}

Pose9D get_pose(detail::ByteReader& r) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = r.get<double>();
  }
  Pose9D p;
  p.r = Rotation::from_matrix_unchecked(m);
  for (int c = 0; c < 3; ++c) p.t(c) = r.get<double>();
  for (int c = 0; c < 3; ++c) p.s(c) = r.get<double>();
  return p;
}

void put_cloud(detail::ByteWriter& w, const PointCloud& pts) {
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (int c = 0; c < 3; ++c) w.put(pts(i, c));
  }
}

PointCloud get_cloud(detail::ByteReader& r, std::uint32_t n) {
  PointCloud pts(n, 3);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) pts(i, c) = r.get<double>();
  }
  return pts;
}

}  // namespace

std::vector<unsigned char> encode_sample(const SceneSample& s) {
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kRecordMagic, 4));
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.model_points.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.observed.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.id.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.category.size()));
  w.put_bytes(s.id);
  w.put_bytes(s.category);
  put_pose(w, s.gt);
  put_pose(w, s.init);
  for (int c = 0; c < 3; ++c) w.put(s.viewpoint(c));
  put_cloud(w, s.model_points);
  put_cloud(w, s.observed);
  return std::move(w.bytes());
}

SceneSample decode_sample(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes);
  if (r.get_string(4) != std::string_view(kRecordMagic, 4)) {
    throw Error(ErrorKind::kFormat, "bad record magic");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion) {
    throw Error(ErrorKind::kVersionMismatch, "record version " + std::to_string(version));
  }
  const auto n_model = r.get<std::uint32_t>();
  const auto n_obs = r.get<std::uint32_t>();
  const auto id_len = r.get<std::uint32_t>();
  const auto cat_len = r.get<std::uint32_t>();
  // Cheap guard against absurd counts from corrupt headers.
  const std::size_t payload = (2 * 15 + 3 + 3 * (std::size_t{n_model} + n_obs)) * sizeof(double);
  if (r.remaining() != std::size_t{id_len} + cat_len + payload) {
    throw Error(ErrorKind::kFormat, "record size does not match its header");
  }
  SceneSample s;
  s.id = r.get_string(id_len);
  s.category = r.get_string(cat_len);
  s.gt = get_pose(r);
  s.init = get_pose(r);
  for (int c = 0; c < 3; ++c) s.viewpoint(c) = r.get<double>();
  s.model_points = get_cloud(r, n_model);
  s.observed = get_cloud(r, n_obs);
  return s;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "records", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "catre-dataset";
  manifest["version"] = kDatasetVersion;
  manifest["categories"] = nlohmann::json::array();
  for (const auto& cat : dataset.categories) manifest["categories"].push_back(detail::category_to_json(cat));
  manifest["samples"] = nlohmann::json::array();
  for (const auto& s : dataset.samples) {
    const std::string rel = "records/" + s.id + ".bin";
    detail::write_file(dir / rel, encode_sample(s));
    manifest["samples"].push_back({{"id", s.id}, {"category", s.category}, {"record", rel}});
  }
  if (dataset.sequence) {
    manifest["sequence"] = {{"consecutive", dataset.sequence->consecutive},
                            {"angular_deg_per_frame", dataset.sequence->angular_deg_per_frame},
                            {"linear_m_per_frame", dataset.sequence->linear_m_per_frame}};
  }
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto text = detail::read_file(dir / "manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format") != "catre-dataset") {
      throw Error(ErrorKind::kFormat, "not a catre dataset manifest");
    }
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kDatasetVersion) {
      throw Error(ErrorKind::kVersionMismatch, "dataset version " + std::to_string(version));
    }
    Dataset out;
    for (const auto& c : manifest.at("categories")) out.categories.push_back(detail::category_from_json(c));
    for (const auto& entry : manifest.at("samples")) {
      SceneSample s = decode_sample(detail::read_file(dir / entry.at("record").get<std::string>()));
      if (s.id != entry.at("id").get<std::string>()) {
        throw Error(ErrorKind::kFormat, "record id does not match manifest: " + s.id);
      }
      out.samples.push_back(std::move(s));
    }
    if (manifest.contains("sequence")) {
      const auto& seq = manifest["sequence"];
      SequenceInfo info;
      info.consecutive = seq.at("consecutive").get<std::vector<bool>>();
      info.angular_deg_per_frame = seq.at("angular_deg_per_frame").get<double>();
      info.linear_m_per_frame = seq.at("linear_m_per_frame").get<double>();
      if (info.consecutive.size() != out.samples.size()) {
        throw Error(ErrorKind::kFormat, "sequence flag count differs from frame count");
      }
      out.sequence = std::move(info);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "manifest: " + std::string(e.what()));
  }
}

}  // namespace catre
