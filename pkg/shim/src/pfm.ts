/**
 * PFM encode/decode. Single-channel ("Pf") only, the container consumed by
 * the label pipeline: header `Pf\n<width> <height>\n<scale>\n`, scale < 0
 * meaning little-endian, payload rows bottom-up, 4-byte floats.
 */

export interface FloatMap {
  width: number
  height: number
  /** row-major, top-down */
  values: Float32Array
}

export function encodePfm(map: FloatMap): Buffer {
  const { width, height, values } = map
  if (values.length !== width * height) {
    throw new Error(`value count ${values.length} != ${width}x${height}`)
  }
  const header = Buffer.from(`Pf\n${width} ${height}\n-1.0\n`, 'ascii')
  const payload = Buffer.alloc(width * height * 4)
  for (let y = 0; y < height; y++) {
    const srcRow = height - 1 - y // bottom-up on disk
    for (let x = 0; x < width; x++) {
      payload.writeFloatLE(values[srcRow * width + x], (y * width + x) * 4)
    }
  }
  return Buffer.concat([header, payload])
}

export function decodePfm(buf: Buffer): FloatMap {
  let offset = 0
  const line = () => {
    const nl = buf.indexOf(0x0a, offset)
    if (nl < 0) throw new Error('truncated PFM header')
    const text = buf.subarray(offset, nl).toString('ascii').trim()
    offset = nl + 1
    return text
  }
  const magic = line()
  if (magic === 'PF') throw new Error('3-channel PFM not supported')
  if (magic !== 'Pf') throw new Error(`bad PFM magic ${JSON.stringify(magic)}`)
  const dims = line().split(/\s+/)
  const width = Number(dims[0])
  const height = Number(dims[1])
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`bad PFM dims ${dims.join(' ')}`)
  }
  const scale = Number(line())
  if (!Number.isFinite(scale)) throw new Error('bad PFM scale')
  const littleEndian = scale < 0
  if (buf.length - offset < width * height * 4) throw new Error('truncated PFM payload')
  const values = new Float32Array(width * height)
  for (let y = 0; y < height; y++) {
    const dstRow = height - 1 - y
    for (let x = 0; x < width; x++) {
      const at = offset + (y * width + x) * 4
      values[dstRow * width + x] = littleEndian ? buf.readFloatLE(at) : buf.readFloatBE(at)
    }
  }
  return { width, height, values }
}
