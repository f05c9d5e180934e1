#include "dft/sha256.hpp"

#include "dft/error.hpp"

#include <openssl/evp.h>

namespace dft {

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha256::Sha256() : impl_(std::make_unique<Impl>())
{
    impl_->ctx = EVP_MD_CTX_new();
    if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
        throw Error("integrity.HashFailure", "cannot initialise SHA-256 context");
}

Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

void Sha256::update(std::span<const std::byte> data)
{
    if (data.empty())
        return;
    if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1)
        throw Error("integrity.HashFailure", "SHA-256 update failed");
}

void Sha256::update(std::string_view data)
{
    update(std::as_bytes(std::span(data.data(), data.size())));
}

std::string Sha256::hex_digest()
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx, md, &len) != 1)
        throw Error("integrity.HashFailure", "SHA-256 finalisation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0x0f]);
    }
    return out;
}

std::string sha256_hex(std::string_view data)
{
    Sha256 h;
    h.update(data);
    return h.hex_digest();
}

} // namespace dft
