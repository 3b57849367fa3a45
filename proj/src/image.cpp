#include "iris/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "iris/error.hpp"

namespace iris {

namespace {

Image from_mat(const cv::Mat& m) {
    Image img(m.cols, m.rows, m.channels());
    if (m.channels() == 1) {
        for (int y = 0; y < m.rows; ++y)
            std::copy_n(m.ptr<std::uint8_t>(y), m.cols, &img.data[static_cast<std::size_t>(y) * m.cols]);
    } else {
        // OpenCV is BGR; store RGB.
        for (int y = 0; y < m.rows; ++y) {
            const auto* row = m.ptr<cv::Vec3b>(y);
            for (int x = 0; x < m.cols; ++x) {
                img.at(y, x, 0) = row[x][2];
                img.at(y, x, 1) = row[x][1];
                img.at(y, x, 2) = row[x][0];
            }
        }
    }
    return img;
}

cv::Mat to_mat(const Image& img) {
    if (img.channels == 1) {
        cv::Mat m(img.height, img.width, CV_8UC1);
        for (int y = 0; y < img.height; ++y)
            std::copy_n(&img.data[static_cast<std::size_t>(y) * img.width], img.width,
                        m.ptr<std::uint8_t>(y));
        return m;
    }
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width; ++x) {
            row[x][0] = img.at(y, x, 2);
            row[x][1] = img.at(y, x, 1);
            row[x][2] = img.at(y, x, 0);
        }
    }
    return m;
}

}  // namespace

Image load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image: " + path);
    if (m.depth() != CV_8U) {
        cv::Mat tmp;
        m.convertTo(tmp, CV_8U, m.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
        m = tmp;
    }
    if (m.channels() == 4) {
        cv::Mat tmp;
        cv::cvtColor(m, tmp, cv::COLOR_BGRA2BGR);
        m = tmp;
    }
    if (m.channels() != 1 && m.channels() != 3)
        throw IoError("unsupported channel count in " + path);
    return from_mat(m);
}

void save_image(const Image& img, const std::string& path) {
    if (img.empty()) throw IoError("refusing to write empty image: " + path);
    if (!cv::imwrite(path, to_mat(img))) throw IoError("cannot write image: " + path);
}

std::pair<int, int> probe_image_size(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image: " + path);
    return {m.cols, m.rows};
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (img.empty() || out_w < 1 || out_h < 1)
        throw ValidationError("resize_bilinear: zero-area input or output");
    if (out_w == img.width && out_h == img.height) return img;
    cv::Mat dst;
    cv::resize(to_mat(img), dst, cv::Size(out_w, out_h), 0, 0, cv::INTER_LINEAR);
    return from_mat(dst);
}

Image resize_nearest(const Image& img, int out_w, int out_h) {
    if (img.empty() || out_w < 1 || out_h < 1)
        throw ValidationError("resize_nearest: zero-area input or output");
    if (out_w == img.width && out_h == img.height) return img;
    cv::Mat dst;
    cv::resize(to_mat(img), dst, cv::Size(out_w, out_h), 0, 0, cv::INTER_NEAREST);
    return from_mat(dst);
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    Image out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t v = img.at(y, x);
            out.at(y, x, 0) = v;
            out.at(y, x, 1) = v;
            out.at(y, x, 2) = v;
        }
    return out;
}

}  // namespace iris
