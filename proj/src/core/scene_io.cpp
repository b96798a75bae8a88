#include "scene_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "error.hpp"

namespace nsplat {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "nsplat-scene";
constexpr int kVersion = 1;

struct BlobWriter {
    std::vector<float> data;

    json put(const std::vector<double>& v) {
        json j;
        j["offset"] = data.size();
        j["count"] = v.size();
        for (double d : v) data.push_back(static_cast<float>(d));
        return j;
    }
};

struct BlobReader {
    std::vector<float> data;

    std::vector<double> fetch(const json& parent, const std::string& field, size_t expect = SIZE_MAX) const {
        if (!parent.contains(field))
            fail(ErrorCode::parse, "scene manifest missing array '" + field + "'");
        const json& j = parent[field];
        if (!j.contains("offset") || !j.contains("count"))
            fail(ErrorCode::parse, "array '" + field + "' needs 'offset' and 'count'");
        size_t off = j["offset"].get<size_t>();
        size_t cnt = j["count"].get<size_t>();
        if (expect != SIZE_MAX && cnt != expect)
            fail(ErrorCode::parse, "array '" + field + "' has count " + std::to_string(cnt) +
                                       ", expected " + std::to_string(expect));
        if (off + cnt > data.size())
            fail(ErrorCode::parse, "array '" + field + "' exceeds the blob size");
        return std::vector<double>(data.begin() + off, data.begin() + off + cnt);
    }
};

std::vector<double> pack_gaussians(const std::vector<GaussianPrimitive>& gs,
                                   const std::function<void(const GaussianPrimitive&, std::vector<double>&)>& fn) {
    std::vector<double> v;
    for (const auto& g : gs) fn(g, v);
    return v;
}

json write_gaussian_arrays(BlobWriter& w, const std::vector<GaussianPrimitive>& gs) {
    json arrays;
    arrays["mu"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.insert(v.end(), {g.mu.x, g.mu.y, g.mu.z});
    }));
    arrays["rot"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.insert(v.end(), {g.rot.w, g.rot.x, g.rot.y, g.rot.z});
    }));
    arrays["log_scale"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.insert(v.end(), {g.log_scale.x, g.log_scale.y, g.log_scale.z});
    }));
    arrays["opacity"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.push_back(g.opacity_logit);
    }));
    arrays["albedo"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.insert(v.end(), {g.albedo_logit.x, g.albedo_logit.y, g.albedo_logit.z});
    }));
    arrays["roughness"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.push_back(g.roughness_logit);
    }));
    arrays["metallic"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.push_back(g.metallic_logit);
    }));
    arrays["normal"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        v.insert(v.end(), {g.normal_raw.x, g.normal_raw.y, g.normal_raw.z});
    }));
    arrays["asg"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
        for (const auto& l : g.asg)
            v.insert(v.end(), {l.frame_q.w, l.frame_q.x, l.frame_q.y, l.frame_q.z, l.log_sharp_x,
                               l.log_sharp_y, l.amp_raw.x, l.amp_raw.y, l.amp_raw.z});
    }));
    bool any_spec = false;
    for (const auto& g : gs) any_spec |= !g.spec_sh.empty();
    if (any_spec) {
        arrays["spec_sh"] = w.put(pack_gaussians(gs, [](const GaussianPrimitive& g, std::vector<double>& v) {
            if (g.spec_sh.size() == kSpecShCoeffs)
                v.insert(v.end(), g.spec_sh.begin(), g.spec_sh.end());
            else
                v.insert(v.end(), kSpecShCoeffs, 0.0);
        }));
    }
    return arrays;
}

std::vector<GaussianPrimitive> read_gaussian_arrays(const BlobReader& r, const json& node, size_t n) {
    std::vector<GaussianPrimitive> gs(n);
    if (!node.contains("arrays")) fail(ErrorCode::parse, "gaussian node missing 'arrays'");
    const json& arrays = node["arrays"];
    auto mu = r.fetch(arrays, "mu", n * 3);
    auto rot = r.fetch(arrays, "rot", n * 4);
    auto ls = r.fetch(arrays, "log_scale", n * 3);
    auto op = r.fetch(arrays, "opacity", n);
    auto alb = r.fetch(arrays, "albedo", n * 3);
    auto rough = r.fetch(arrays, "roughness", n);
    auto metal = r.fetch(arrays, "metallic", n);
    auto nrm = r.fetch(arrays, "normal", n * 3);
    auto asg = r.fetch(arrays, "asg", n * kAsgLobes * 9);
    std::vector<double> spec;
    if (arrays.contains("spec_sh")) spec = r.fetch(arrays, "spec_sh", n * kSpecShCoeffs);

    for (size_t i = 0; i < n; ++i) {
        GaussianPrimitive& g = gs[i];
        g.mu = {mu[i * 3], mu[i * 3 + 1], mu[i * 3 + 2]};
        g.rot = {rot[i * 4], rot[i * 4 + 1], rot[i * 4 + 2], rot[i * 4 + 3]};
        g.log_scale = {ls[i * 3], ls[i * 3 + 1], ls[i * 3 + 2]};
        g.opacity_logit = op[i];
        g.albedo_logit = {alb[i * 3], alb[i * 3 + 1], alb[i * 3 + 2]};
        g.roughness_logit = rough[i];
        g.metallic_logit = metal[i];
        g.normal_raw = {nrm[i * 3], nrm[i * 3 + 1], nrm[i * 3 + 2]};
        for (int l = 0; l < kAsgLobes; ++l) {
            const double* p = &asg[(i * kAsgLobes + l) * 9];
            g.asg[l].frame_q = {p[0], p[1], p[2], p[3]};
            g.asg[l].log_sharp_x = p[4];
            g.asg[l].log_sharp_y = p[5];
            g.asg[l].amp_raw = {p[6], p[7], p[8]};
        }
        if (!spec.empty())
            g.spec_sh.assign(spec.begin() + i * kSpecShCoeffs, spec.begin() + (i + 1) * kSpecShCoeffs);
    }
    return gs;
}

}  // namespace

void save_scene(const SceneGraph& scene, const std::string& manifest_path) {
    std::filesystem::path mpath(manifest_path);
    std::filesystem::path bpath = mpath;
    bpath.replace_extension(".bin");

    BlobWriter w;
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["blob"] = bpath.filename().string();
    j["dtype"] = "float32-le";

    j["timeline"] = w.put(scene.timeline);

    json cams = json::array();
    std::vector<double> cam_data;
    for (const auto& c : scene.cameras) {
        json cm;
        cm["width"] = c.width;
        cm["height"] = c.height;
        cm["camera_id"] = c.camera_id;
        cams.push_back(cm);
        cam_data.insert(cam_data.end(),
                        {c.fx, c.fy, c.cx, c.cy, c.pose.rotation.w, c.pose.rotation.x, c.pose.rotation.y,
                         c.pose.rotation.z, c.pose.translation.x, c.pose.translation.y,
                         c.pose.translation.z, c.timestep});
    }
    j["cameras"] = {{"meta", cams}, {"data", w.put(cam_data)}};

    j["sky"] = {{"face_resolution", scene.sky.face_resolution}, {"texels", w.put(scene.sky.texels)}};

    json bg;
    bg["count"] = scene.background.size();
    bg["arrays"] = write_gaussian_arrays(w, scene.background);
    j["background"] = bg;

    json actors = json::array();
    for (const auto& a : scene.actors) {
        json an;
        an["id"] = a.id;
        an["count"] = a.gaussians.size();
        an["arrays"] = write_gaussian_arrays(w, a.gaussians);
        std::vector<double> traj;
        for (const auto& [t, pose] : a.trajectory)
            traj.insert(traj.end(), {t, pose.rotation.w, pose.rotation.x, pose.rotation.y, pose.rotation.z,
                                     pose.translation.x, pose.translation.y, pose.translation.z});
        an["trajectory"] = w.put(traj);
        an["bbox"] = w.put({a.bbox_min.x, a.bbox_min.y, a.bbox_min.z, a.bbox_max.x, a.bbox_max.y,
                            a.bbox_max.z});
        actors.push_back(an);
    }
    j["actors"] = actors;

    const IllumNet& net = scene.illum;
    json in;
    in["embed_dim"] = net.embed_dim;
    in["hidden"] = net.hidden;
    in["depth"] = net.depth;
    in["camera_ids"] = net.camera_ids;
    json iarr;
    for (int l = 0; l < net.depth; ++l) {
        iarr["w" + std::to_string(l)] = w.put(net.weights[l]);
        iarr["b" + std::to_string(l)] = w.put(net.biases[l]);
    }
    for (int band = 0; band < 3; ++band) {
        iarr["head_w" + std::to_string(band)] = w.put(net.head_w[band]);
        iarr["head_b" + std::to_string(band)] = w.put(net.head_b[band]);
    }
    std::vector<double> emb;
    for (const auto& e : net.embeddings) emb.insert(emb.end(), e.begin(), e.end());
    iarr["embeddings"] = w.put(emb);
    in["arrays"] = iarr;
    j["illum"] = in;

    std::ofstream mout(mpath, std::ios::trunc);
    if (!mout) fail(ErrorCode::io, "cannot write '" + manifest_path + "'");
    mout << j.dump(2) << "\n";

    std::ofstream bout(bpath, std::ios::binary | std::ios::trunc);
    if (!bout) fail(ErrorCode::io, "cannot write '" + bpath.string() + "'");
    bout.write(reinterpret_cast<const char*>(w.data.data()),
               static_cast<std::streamsize>(w.data.size() * sizeof(float)));
}

SceneGraph load_scene(const std::string& manifest_path) {
    std::ifstream min(manifest_path);
    if (!min) fail(ErrorCode::io, "cannot open scene '" + manifest_path + "'");
    json j;
    try {
        min >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("scene manifest parse error: ") + e.what());
    }

    if (j.value("format", "") != kFormat)
        fail(ErrorCode::parse, "not a scene manifest (format field mismatch)");
    if (j.value("version", -1) != kVersion)
        fail(ErrorCode::parse, "unsupported scene version " + std::to_string(j.value("version", -1)));

    std::filesystem::path bpath =
        std::filesystem::path(manifest_path).parent_path() / j.value("blob", "");
    std::ifstream bin(bpath, std::ios::binary | std::ios::ate);
    if (!bin) fail(ErrorCode::io, "cannot open blob '" + bpath.string() + "'");
    size_t bytes = static_cast<size_t>(bin.tellg());
    bin.seekg(0);
    BlobReader r;
    r.data.resize(bytes / sizeof(float));
    bin.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(bytes));

    SceneGraph scene;
    scene.timeline = r.fetch(j, "timeline");

    if (!j.contains("cameras")) fail(ErrorCode::parse, "scene manifest missing 'cameras'");
    const json& cams = j["cameras"];
    size_t ncams = cams["meta"].size();
    auto cam_data = r.fetch(cams, "data", ncams * 12);
    for (size_t i = 0; i < ncams; ++i) {
        CameraModel c;
        const json& cm = cams["meta"][i];
        c.width = cm["width"].get<int>();
        c.height = cm["height"].get<int>();
        c.camera_id = cm["camera_id"].get<int>();
        const double* p = &cam_data[i * 12];
        c.fx = p[0];
        c.fy = p[1];
        c.cx = p[2];
        c.cy = p[3];
        c.pose.rotation = {p[4], p[5], p[6], p[7]};
        c.pose.translation = {p[8], p[9], p[10]};
        c.timestep = p[11];
        if (c.fx <= 0 || c.fy <= 0 || c.width <= 0 || c.height <= 0)
            fail(ErrorCode::parse, "camera " + std::to_string(i) + " has invalid intrinsics");
        scene.cameras.push_back(c);
    }
    if (scene.cameras.empty()) fail(ErrorCode::parse, "scene declares no cameras");

    if (!j.contains("sky")) fail(ErrorCode::parse, "scene manifest missing 'sky'");
    scene.sky.face_resolution = j["sky"]["face_resolution"].get<int>();
    scene.sky.texels =
        r.fetch(j["sky"], "texels",
                static_cast<size_t>(6) * scene.sky.face_resolution * scene.sky.face_resolution * 3);
    for (auto& v : scene.sky.texels)
        if (v < 0.0) v = 0.0;  // texels are non-negative by contract

    if (!j.contains("background")) fail(ErrorCode::parse, "scene manifest missing 'background'");
    scene.background = read_gaussian_arrays(r, j["background"], j["background"]["count"].get<size_t>());

    for (const json& an : j.value("actors", json::array())) {
        RigidActor a;
        a.id = an.value("id", "");
        a.gaussians = read_gaussian_arrays(r, an, an["count"].get<size_t>());
        auto traj = r.fetch(an, "trajectory");
        if (traj.size() % 8 != 0) fail(ErrorCode::parse, "actor trajectory length not a multiple of 8");
        for (size_t i = 0; i < traj.size(); i += 8) {
            Se3Pose pose;
            pose.rotation = {traj[i + 1], traj[i + 2], traj[i + 3], traj[i + 4]};
            pose.translation = {traj[i + 5], traj[i + 6], traj[i + 7]};
            a.trajectory.emplace_back(traj[i], pose);
        }
        auto bbox = r.fetch(an, "bbox", 6);
        a.bbox_min = {bbox[0], bbox[1], bbox[2]};
        a.bbox_max = {bbox[3], bbox[4], bbox[5]};
        for (double t : scene.timeline)
            if (!a.pose_at(t))
                fail(ErrorCode::missing_pose,
                     "actor '" + a.id + "' trajectory does not cover timestep " + std::to_string(t));
        scene.actors.push_back(std::move(a));
    }

    if (!j.contains("illum")) fail(ErrorCode::parse, "scene manifest missing 'illum'");
    const json& in = j["illum"];
    IllumNet& net = scene.illum;
    net.embed_dim = in["embed_dim"].get<int>();
    net.hidden = in["hidden"].get<int>();
    net.depth = in["depth"].get<int>();
    net.camera_ids = in["camera_ids"].get<std::vector<int>>();
    const json& iarr = in["arrays"];
    net.weights.resize(net.depth);
    net.biases.resize(net.depth);
    for (int l = 0; l < net.depth; ++l) {
        int fan_in = l == 0 ? net.input_dim() : net.hidden;
        net.weights[l] = r.fetch(iarr, "w" + std::to_string(l), static_cast<size_t>(net.hidden) * fan_in);
        net.biases[l] = r.fetch(iarr, "b" + std::to_string(l), net.hidden);
    }
    for (int band = 0; band < 3; ++band) {
        size_t out = static_cast<size_t>(2 * band + 1) * 3;
        net.head_w[band] = r.fetch(iarr, "head_w" + std::to_string(band), out * net.hidden);
        net.head_b[band] = r.fetch(iarr, "head_b" + std::to_string(band), out);
    }
    auto emb = r.fetch(iarr, "embeddings", net.camera_ids.size() * net.embed_dim);
    net.embeddings.resize(net.camera_ids.size());
    for (size_t e = 0; e < net.embeddings.size(); ++e)
        net.embeddings[e].assign(emb.begin() + e * net.embed_dim, emb.begin() + (e + 1) * net.embed_dim);

    return scene;
}

void quantize_to_storage(SceneGraph& scene) {
    auto q = [](double& v) { v = static_cast<double>(static_cast<float>(v)); };
    auto qv3 = [&q](Vec3& v) { q(v.x); q(v.y); q(v.z); };
    auto qv4 = [&q](Vec4& v) { q(v.w); q(v.x); q(v.y); q(v.z); };
    auto qg = [&](GaussianPrimitive& g) {
        qv3(g.mu);
        qv4(g.rot);
        qv3(g.log_scale);
        q(g.opacity_logit);
        qv3(g.albedo_logit);
        q(g.roughness_logit);
        q(g.metallic_logit);
        qv3(g.normal_raw);
        for (auto& l : g.asg) {
            qv4(l.frame_q);
            q(l.log_sharp_x);
            q(l.log_sharp_y);
            qv3(l.amp_raw);
        }
        for (auto& v : g.spec_sh) q(v);
    };
    for (auto& g : scene.background) qg(g);
    for (auto& a : scene.actors) {
        for (auto& g : a.gaussians) qg(g);
        for (auto& [t, pose] : a.trajectory) {
            q(t);
            qv4(pose.rotation);
            qv3(pose.translation);
        }
        qv3(a.bbox_min);
        qv3(a.bbox_max);
    }
    for (auto& v : scene.sky.texels) q(v);
    for (auto& t : scene.timeline) q(t);
    for (auto& c : scene.cameras) {
        q(c.fx); q(c.fy); q(c.cx); q(c.cy);
        qv4(c.pose.rotation);
        qv3(c.pose.translation);
        q(c.timestep);
    }
    for (auto& w : scene.illum.weights)
        for (auto& v : w) q(v);
    for (auto& b : scene.illum.biases)
        for (auto& v : b) q(v);
    for (int band = 0; band < 3; ++band) {
        for (auto& v : scene.illum.head_w[band]) q(v);
        for (auto& v : scene.illum.head_b[band]) q(v);
    }
    for (auto& e : scene.illum.embeddings)
        for (auto& v : e) q(v);
}

}  // namespace nsplat
