#include "leishquant/raster.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <json.hpp>

namespace lq {

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

Plane load_gray_plane(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (img.empty())
        throw std::runtime_error("format error: cannot read " + path);
    Plane p(img.cols, img.rows);
    for (int y = 0; y < img.rows; ++y)
        for (int x = 0; x < img.cols; ++x)
            p.at(x, y) = img.at<std::uint8_t>(y, x);
    return p;
}

}  // namespace

ChannelSet load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("format error: cannot open manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("format error: bad manifest " + path + ": " + e.what());
    }
    for (const char* key : {"macrophage", "parasite", "cytoplasm"})
        if (!j.contains(key))
            throw std::runtime_error("channel-mapping error: manifest missing '" +
                                     std::string(key) + "'");

    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        if (fp.is_relative())
            fp = std::filesystem::path(path).parent_path() / fp;
        return fp.string();
    };

    ChannelSet cs;
    cs.macrophage = load_gray_plane(resolve(j["macrophage"].get<std::string>()));
    cs.parasite = load_gray_plane(resolve(j["parasite"].get<std::string>()));
    cs.cytoplasm = load_gray_plane(resolve(j["cytoplasm"].get<std::string>()));
    if (cs.macrophage.width != cs.parasite.width || cs.macrophage.width != cs.cytoplasm.width ||
        cs.macrophage.height != cs.parasite.height || cs.macrophage.height != cs.cytoplasm.height)
        throw std::runtime_error("geometry error: manifest planes have mismatched sizes");
    return cs;
}

ChannelSet load_image(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("format error: no such file " + path);
    std::string ext = lower_ext(path);
    if (ext == ".json")
        return load_manifest(path);

    cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (img.empty())
        throw std::runtime_error("format error: cannot read " + path);
    if (img.channels() == 1)
        throw std::runtime_error("channel-mapping error: grayscale input without a manifest: " +
                                 path);
    if (img.depth() != CV_8U) {
        cv::Mat tmp;
        img.convertTo(tmp, CV_8U, 255.0 / ((img.depth() == CV_16U) ? 65535.0 : 1.0));
        img = tmp;
    }

    ChannelSet cs;
    cs.macrophage = Plane(img.cols, img.rows);
    cs.parasite = Plane(img.cols, img.rows);
    cs.cytoplasm = Plane(img.cols, img.rows);
    const int nc = img.channels();  // BGR or BGRA; alpha ignored
    for (int y = 0; y < img.rows; ++y) {
        const std::uint8_t* row = img.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.cols; ++x) {
            cs.macrophage.at(x, y) = row[x * nc + 0];  // blue
            cs.parasite.at(x, y) = row[x * nc + 1];    // green
            cs.cytoplasm.at(x, y) = row[x * nc + 2];   // red
        }
    }
    cs.lossy_source = (ext == ".jpg" || ext == ".jpeg");
    return cs;
}

RgbImage merge_channels(const ChannelSet& channels) {
    channels.validate();
    RgbImage out(channels.width(), channels.height());
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            std::uint8_t* p = out.px(x, y);
            p[0] = channels.cytoplasm.at(x, y);
            p[1] = channels.parasite.at(x, y);
            p[2] = channels.macrophage.at(x, y);
        }
    }
    return out;
}

std::vector<std::pair<int, int>> bresenham_line(int x0, int y0, int x1, int y1) {
    std::vector<std::pair<int, int>> pts;
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        pts.emplace_back(x0, y0);
        if (x0 == x1 && y0 == y1)
            break;
        int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
    return pts;
}

namespace {

void put_marker(RgbImage& img, int cx, int cy, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    // 5px cross
    for (int d = -2; d <= 2; ++d) {
        for (auto [x, y] : {std::pair{cx + d, cy}, std::pair{cx, cy + d}}) {
            if (x >= 0 && x < img.width && y >= 0 && y < img.height) {
                std::uint8_t* p = img.px(x, y);
                p[0] = r;
                p[1] = g;
                p[2] = b;
            }
        }
    }
}

}  // namespace

RgbImage render_overlay(const ChannelSet& channels, const AnnotationSet& annotations) {
    RgbImage img = merge_channels(channels);
    auto check = [&](double x, double y) {
        int xi = static_cast<int>(std::lround(x));
        int yi = static_cast<int>(std::lround(y));
        if (xi < 0 || xi >= img.width || yi < 0 || yi >= img.height)
            throw std::runtime_error("coordinate error: annotation outside plane bounds");
        return std::pair<int, int>{xi, yi};
    };

    for (const auto& link : annotations.links) {
        auto [x0, y0] = check(link.x1, link.y1);
        auto [x1, y1] = check(link.x2, link.y2);
        for (auto [x, y] : bresenham_line(x0, y0, x1, y1)) {
            std::uint8_t* p = img.px(x, y);
            p[0] = 255;
            p[1] = 255;
            p[2] = 0;  // yellow association link
        }
    }
    for (const auto& m : annotations.markers) {
        auto [x, y] = check(m.x, m.y);
        switch (m.kind) {
            case OverlayMarker::macrophage: put_marker(img, x, y, 0, 128, 255); break;
            case OverlayMarker::parasite: put_marker(img, x, y, 0, 255, 0); break;
            case OverlayMarker::sub_centroid: put_marker(img, x, y, 255, 0, 255); break;
        }
    }
    return img;
}

void save_png(const RgbImage& image, const std::string& path) {
    cv::Mat m(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::uint8_t* p = image.px(x, y);
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(p[2], p[1], p[0]);  // BGR
        }
    }
    if (!cv::imwrite(path, m))
        throw std::runtime_error("format error: cannot write " + path);
}

void save_png(const Plane& plane, const std::string& path) {
    cv::Mat m(plane.height, plane.width, CV_8UC1);
    for (int y = 0; y < plane.height; ++y)
        for (int x = 0; x < plane.width; ++x)
            m.at<std::uint8_t>(y, x) = plane.at(x, y);
    if (!cv::imwrite(path, m))
        throw std::runtime_error("format error: cannot write " + path);
}

}  // namespace lq
