/** Bilinear resampling for planar float channels. */

/** Resize one channel from (h, w) to (oh, ow), edge-clamped, align-corners off. */
export function resizeBilinear(
  src: Float32Array,
  w: number,
  h: number,
  ow: number,
  oh: number,
): Float32Array {
  if (ow === w && oh === h) return src.slice()
  const out = new Float32Array(ow * oh)
  const sx = w / ow
  const sy = h / oh
  for (let oy = 0; oy < oh; oy++) {
    const fy = Math.min(Math.max((oy + 0.5) * sy - 0.5, 0), h - 1)
    const y0 = Math.floor(fy)
    const y1 = Math.min(y0 + 1, h - 1)
    const wy = fy - y0
    for (let ox = 0; ox < ow; ox++) {
      const fx = Math.min(Math.max((ox + 0.5) * sx - 0.5, 0), w - 1)
      const x0 = Math.floor(fx)
      const x1 = Math.min(x0 + 1, w - 1)
      const wx = fx - x0
      const top = src[y0 * w + x0] * (1 - wx) + src[y0 * w + x1] * wx
      const bottom = src[y1 * w + x0] * (1 - wx) + src[y1 * w + x1] * wx
      out[oy * ow + ox] = top * (1 - wy) + bottom * wy
    }
  }
  return out
}

/** Resize a CHW tensor channel by channel. */
export function resizeChw(
  src: Float32Array,
  channels: number,
  w: number,
  h: number,
  ow: number,
  oh: number,
): Float32Array {
  const out = new Float32Array(channels * ow * oh)
  for (let c = 0; c < channels; c++) {
    out.set(resizeBilinear(src.subarray(c * w * h, (c + 1) * w * h), w, h, ow, oh), c * ow * oh)
  }
  return out
}
