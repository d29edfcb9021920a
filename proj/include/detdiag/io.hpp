// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reading and writing the standard detection-benchmark annotation and result
// formats. Plain and gzip-compressed files are both accepted.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "detdiag/dataset.hpp"
#include "detdiag/error.hpp"
#include "json.hpp"

namespace detdiag {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw InputError("cannot open '" + path + "'");
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw InputError("read error on '" + path + "'");
  return out;
}

// Writes gzip when the path ends in ".gz".
inline void write_file(const std::string& path, const std::string& content) {
  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw InputError("cannot write '" + path + "'");
    const int n = gzwrite(f, content.data(), static_cast<unsigned>(content.size()));
    gzclose(f);
    if (n != static_cast<int>(content.size()))
      throw InputError("write error on '" + path + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw InputError("write error on '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path, "", std::string("malformed JSON: ") + e.what());
  }
}

namespace detail {

struct Reader {
  const std::string& path;

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw ParseError(path, where, what);
  }

  const json& field(const json& obj, const char* key, const std::string& where) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
    return *it;
  }

  const json& array(const json& obj, const char* key, const std::string& where) const {
    const json& v = field(obj, key, where);
    if (!v.is_array()) fail(where + "/" + key, "expected array");
    return v;
  }

  double number(const json& v, const std::string& where) const {
    if (!v.is_number()) fail(where, "expected number");
    return v.get<double>();
  }

  std::int64_t integer(const json& v, const std::string& where) const {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d) return static_cast<std::int64_t>(d);
    }
    fail(where, "expected integer");
  }

  std::vector<std::int64_t> id_list(const json& obj, const char* key,
                                    const std::string& where) const {
    std::vector<std::int64_t> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) fail(where + "/" + key, "expected array");
    for (std::size_t i = 0; i < it->size(); ++i)
      out.push_back(integer((*it)[i], where + "/" + key + "/" + std::to_string(i)));
    return out;
  }

  Box box(const json& v, const std::string& where) const {
    if (!v.is_array() || v.size() != 4) fail(where, "bbox must be [x, y, w, h]");
    Box b{number(v[0], where + "/0"), number(v[1], where + "/1"),
          number(v[2], where + "/2"), number(v[3], where + "/3")};
    if (b.w < 0 || b.h < 0) fail(where, "bbox has negative width or height");
    return b;
  }

  RleMask rle(const json& v, const std::string& where) const {
    const json& size = field(v, "size", where);
    if (!size.is_array() || size.size() != 2) fail(where + "/size", "expected [height, width]");
    const auto h = integer(size[0], where + "/size/0");
    const auto w = integer(size[1], where + "/size/1");
    if (h < 0 || w < 0) fail(where + "/size", "negative mask size");
    const json& counts = field(v, "counts", where);
    RleMask m;
    try {
      if (counts.is_string()) {
        m = rle_from_string(counts.get<std::string>(), static_cast<std::uint32_t>(h),
                            static_cast<std::uint32_t>(w));
      } else if (counts.is_array()) {
        m.height = static_cast<std::uint32_t>(h);
        m.width = static_cast<std::uint32_t>(w);
        for (std::size_t i = 0; i < counts.size(); ++i) {
          const auto c = integer(counts[i], where + "/counts/" + std::to_string(i));
          if (c < 0) fail(where + "/counts/" + std::to_string(i), "negative run");
          m.counts.push_back(static_cast<std::uint32_t>(c));
        }
      } else {
        fail(where + "/counts", "expected string or integer array");
      }
      validate_rle(m);
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      fail(where, e.what());
    }
    return m;
  }
};

inline json rle_to_json(const RleMask& m) {
  json j;
  j["size"] = {m.height, m.width};
  if (m.compressed) {
    j["counts"] = rle_to_string(m);
  } else {
    j["counts"] = m.counts;
  }
  return j;
}

inline bool fits(const Box& b, const ImageMeta& im) {
  if (im.width == 0 || im.height == 0) return true;
  const double eps = 1e-6;
  return b.x >= -eps && b.y >= -eps && b.x + b.w <= im.width + eps &&
         b.y + b.h <= im.height + eps;
}

}  // namespace detail

// Builds a Dataset from a parsed annotation document.
inline Dataset parse_ground_truth(const json& doc, const std::string& path) {
  detail::Reader r{path};
  if (!doc.is_object()) r.fail("", "expected a JSON object at top level");
  Dataset ds;
  if (auto it = doc.find("info"); it != doc.end() && it->is_object()) {
    if (auto d = it->find("description"); d != it->end() && d->is_string())
      ds.name = d->get<std::string>();
  }

  const json& cats = r.array(doc, "categories", "");
  std::vector<std::string> dup_cats;
  std::unordered_set<CategoryId> cat_ids;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string w = "/categories/" + std::to_string(i);
    Category c;
    c.id = r.integer(r.field(cats[i], "id", w), w + "/id");
    if (auto n = cats[i].find("name"); n != cats[i].end() && n->is_string())
      c.name = n->get<std::string>();
    if (!cat_ids.insert(c.id).second) dup_cats.push_back("category " + std::to_string(c.id));
    ds.categories.push_back(std::move(c));
  }
  if (!dup_cats.empty()) throw ValidationError("duplicate category ids", dup_cats);

  const json& imgs = r.array(doc, "images", "");
  std::unordered_map<ImageId, std::size_t> image_index;
  std::vector<std::string> dup_imgs;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const std::string w = "/images/" + std::to_string(i);
    ImageMeta im;
    im.id = r.integer(r.field(imgs[i], "id", w), w + "/id");
    if (auto v = imgs[i].find("width"); v != imgs[i].end())
      im.width = static_cast<std::uint32_t>(r.integer(*v, w + "/width"));
    if (auto v = imgs[i].find("height"); v != imgs[i].end())
      im.height = static_cast<std::uint32_t>(r.integer(*v, w + "/height"));
    if (auto v = imgs[i].find("file_name"); v != imgs[i].end() && v->is_string())
      im.file_name = v->get<std::string>();
    im.ignored_categories = r.id_list(imgs[i], "not_exhaustive_category_ids", w);
    im.negative_categories = r.id_list(imgs[i], "neg_category_ids", w);
    if (!image_index.emplace(im.id, ds.images.size()).second)
      dup_imgs.push_back("image " + std::to_string(im.id));
    ds.images.push_back(std::move(im));
  }
  if (!dup_imgs.empty()) throw ValidationError("duplicate image ids", dup_imgs);

  const json& anns = r.array(doc, "annotations", "");
  std::vector<std::string> dangling;
  std::unordered_set<AnnotationId> ann_ids;
  std::vector<std::string> dup_anns;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string w = "/annotations/" + std::to_string(i);
    const json& a = anns[i];
    if (!a.is_object()) r.fail(w, "expected object");
    GroundTruth g;
    g.id = r.integer(r.field(a, "id", w), w + "/id");
    g.image_id = r.integer(r.field(a, "image_id", w), w + "/image_id");
    g.category_id = r.integer(r.field(a, "category_id", w), w + "/category_id");
    if (auto v = a.find("iscrowd"); v != a.end() && !v->is_null()) {
      g.is_crowd = v->is_boolean() ? v->get<bool>() : r.integer(*v, w + "/iscrowd") != 0;
    }
    if (auto v = a.find("segmentation"); v != a.end() && !v->is_null()) {
      if (v->is_object()) {
        g.mask = r.rle(*v, w + "/segmentation");
      } else if (v->is_array()) {
        for (std::size_t p = 0; p < v->size(); ++p) {
          const json& poly = (*v)[p];
          if (!poly.is_array())
            r.fail(w + "/segmentation/" + std::to_string(p), "expected polygon array");
          std::vector<double> pts;
          for (std::size_t k = 0; k < poly.size(); ++k)
            pts.push_back(r.number(poly[k], w + "/segmentation/" + std::to_string(p) +
                                                "/" + std::to_string(k)));
          g.polygons.push_back(std::move(pts));
        }
      } else {
        r.fail(w + "/segmentation", "expected RLE object or polygon list");
      }
    }
    if (auto v = a.find("bbox"); v != a.end()) {
      g.box = r.box(*v, w + "/bbox");
    } else if (g.mask) {
      g.box = rle_bbox(*g.mask);
    } else {
      r.fail(w, "annotation has neither bbox nor RLE segmentation");
    }
    if (auto v = a.find("area"); v != a.end() && !v->is_null())
      g.declared_area = r.number(*v, w + "/area");
    g.area = g.mask ? static_cast<double>(rle_area(*g.mask)) : g.box.area();
    g.degenerate = !(g.area > 0);

    if (!cat_ids.count(g.category_id))
      dangling.push_back("annotation " + std::to_string(g.id) + " -> category " +
                         std::to_string(g.category_id));
    auto im = image_index.find(g.image_id);
    if (im == image_index.end()) {
      dangling.push_back("annotation " + std::to_string(g.id) + " -> image " +
                         std::to_string(g.image_id));
    } else {
      const ImageMeta& meta = ds.images[im->second];
      if (!detail::fits(g.box, meta))
        ds.warnings.push_back("annotation " + std::to_string(g.id) +
                              " extends past image " + std::to_string(meta.id));
      if (g.mask && meta.width && meta.height &&
          (g.mask->width != meta.width || g.mask->height != meta.height))
        dangling.push_back("annotation " + std::to_string(g.id) +
                           " mask size differs from image size");
    }
    if (!ann_ids.insert(g.id).second) dup_anns.push_back("annotation " + std::to_string(g.id));
    ds.annotations.push_back(std::move(g));
  }
  if (!dup_anns.empty()) throw ValidationError("duplicate annotation ids", dup_anns);
  if (!dangling.empty()) throw ValidationError("invalid annotation references", dangling);
  return ds;
}

inline Dataset load_ground_truth(const std::string& path) {
  Dataset ds = parse_ground_truth(parse_json(read_file(path), path), path);
  if (ds.name.empty()) ds.name = path;
  return ds;
}

inline json ground_truth_to_json(const Dataset& ds) {
  json doc;
  doc["info"] = {{"description", ds.name}};
  doc["categories"] = json::array();
  for (const auto& c : ds.categories)
    doc["categories"].push_back({{"id", c.id}, {"name", c.name}});
  doc["images"] = json::array();
  for (const auto& im : ds.images) {
    json j = {{"id", im.id}, {"width", im.width}, {"height", im.height}};
    if (!im.file_name.empty()) j["file_name"] = im.file_name;
    if (!im.ignored_categories.empty())
      j["not_exhaustive_category_ids"] = im.ignored_categories;
    if (!im.negative_categories.empty()) j["neg_category_ids"] = im.negative_categories;
    doc["images"].push_back(std::move(j));
  }
  doc["annotations"] = json::array();
  for (const auto& g : ds.annotations) {
    json j = {{"id", g.id},
              {"image_id", g.image_id},
              {"category_id", g.category_id},
              {"bbox", {g.box.x, g.box.y, g.box.w, g.box.h}},
              {"iscrowd", g.is_crowd ? 1 : 0},
              {"area", g.declared_area.value_or(g.area)}};
    if (g.mask) {
      j["segmentation"] = detail::rle_to_json(*g.mask);
    } else if (!g.polygons.empty()) {
      j["segmentation"] = g.polygons;
    }
    doc["annotations"].push_back(std::move(j));
  }
  return doc;
}

inline void save_ground_truth(const Dataset& ds, const std::string& path) {
  write_file(path, ground_truth_to_json(ds).dump());
}

// Binds predictions to a loaded dataset. Keeps, per image, the
// max_dets_per_image highest-scoring detections (ties by file order).
inline DetectionSet parse_detections(const json& doc, const Dataset& ds,
                                     const EvalConfig& cfg, const std::string& path) {
  detail::Reader r{path};
  const json* arr = &doc;
  std::string prefix;
  if (doc.is_object()) {
    arr = &r.array(doc, "annotations", "");
    prefix = "/annotations";
  }
  if (!arr->is_array()) r.fail("", "expected an array of detections");

  std::unordered_set<CategoryId> cat_ids;
  for (const auto& c : ds.categories) cat_ids.insert(c.id);
  std::unordered_map<ImageId, const ImageMeta*> images;
  for (const auto& im : ds.images) images.emplace(im.id, &im);

  DetectionSet out;
  out.name = path;
  std::vector<std::string> bad_refs, bad_scores, bad_geometry;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string w = prefix + "/" + std::to_string(i);
    const json& a = (*arr)[i];
    if (!a.is_object()) r.fail(w, "expected object");
    Detection d;
    d.ordinal = static_cast<std::int64_t>(i);
    d.image_id = r.integer(r.field(a, "image_id", w), w + "/image_id");
    d.category_id = r.integer(r.field(a, "category_id", w), w + "/category_id");
    d.score = r.number(r.field(a, "score", w), w + "/score");
    if (auto v = a.find("bbox"); v != a.end() && !v->is_null()) d.box = r.box(*v, w + "/bbox");
    if (auto v = a.find("segmentation"); v != a.end() && !v->is_null()) {
      if (!v->is_object()) r.fail(w + "/segmentation", "detections must use RLE segmentation");
      d.mask = r.rle(*v, w + "/segmentation");
    }
    const std::string tag = "detection #" + std::to_string(i);
    auto im = images.find(d.image_id);
    if (im == images.end())
      bad_refs.push_back(tag + " -> image " + std::to_string(d.image_id));
    if (!cat_ids.count(d.category_id))
      bad_refs.push_back(tag + " -> category " + std::to_string(d.category_id));
    if (!(d.score >= 0 && d.score <= 1)) bad_scores.push_back(tag + " score " + std::to_string(d.score));
    if (cfg.mode == Mode::Mask) {
      if (!d.mask) {
        bad_geometry.push_back(tag + " has no segmentation");
      } else {
        if (!d.box) d.box = rle_bbox(*d.mask);
        if (im != images.end() && im->second->width && im->second->height &&
            (d.mask->width != im->second->width || d.mask->height != im->second->height))
          bad_geometry.push_back(tag + " mask size differs from image size");
      }
    } else if (!d.box) {
      bad_geometry.push_back(tag + " has no bbox");
    }
    out.detections.push_back(std::move(d));
  }
  if (!bad_refs.empty()) throw ValidationError("detections reference unknown ids", bad_refs);
  if (!bad_scores.empty()) throw ValidationError("detection scores outside [0, 1]", bad_scores);
  if (!bad_geometry.empty())
    throw ValidationError(std::string("detections invalid for ") + to_string(cfg.mode) + " mode",
                          bad_geometry);

  // Per-image truncation.
  std::unordered_map<ImageId, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < out.detections.size(); ++i)
    by_image[out.detections[i].image_id].push_back(i);
  std::vector<char> keep(out.detections.size(), 1);
  for (auto& [img, idx] : by_image) {
    if (idx.size() <= cfg.max_dets_per_image) continue;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return out.detections[a].score > out.detections[b].score;
    });
    for (std::size_t k = cfg.max_dets_per_image; k < idx.size(); ++k) keep[idx[k]] = 0;
  }
  std::vector<Detection> kept;
  kept.reserve(out.detections.size());
  for (std::size_t i = 0; i < out.detections.size(); ++i)
    if (keep[i]) kept.push_back(std::move(out.detections[i]));
  out.detections = std::move(kept);
  return out;
}

inline DetectionSet load_detections(const std::string& path, const Dataset& ds,
                                    const EvalConfig& cfg) {
  return parse_detections(parse_json(read_file(path), path), ds, cfg, path);
}

inline json detections_to_json(const DetectionSet& dets) {
  json arr = json::array();
  for (const auto& d : dets.detections) {
    json j = {{"image_id", d.image_id}, {"category_id", d.category_id}, {"score", d.score}};
    if (d.box) j["bbox"] = {d.box->x, d.box->y, d.box->w, d.box->h};
    if (d.mask) j["segmentation"] = detail::rle_to_json(*d.mask);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline void save_detections(const DetectionSet& dets, const std::string& path) {
  write_file(path, detections_to_json(dets).dump());
}

}  // namespace detdiag
