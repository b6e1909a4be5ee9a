/** PNG/JPEG decoding to packed 8-bit RGB. */

import * as fs from 'fs'
import jpeg from 'jpeg-js'
import { PNG } from 'pngjs'

export interface RgbImage {
  width: number
  height: number
  /** row-major RGB triples, length width * height * 3 */
  rgb: Uint8Array
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47])
const JPEG_MAGIC = Buffer.from([0xff, 0xd8])

export function decodeImage(path: string): RgbImage {
  const buf = fs.readFileSync(path)
  if (buf.subarray(0, 4).equals(PNG_MAGIC)) {
    const png = PNG.sync.read(buf)
    return stripAlpha(png.width, png.height, png.data)
  }
  if (buf.subarray(0, 2).equals(JPEG_MAGIC)) {
    const img = jpeg.decode(buf, { useTArray: true, formatAsRGBA: true })
    return stripAlpha(img.width, img.height, img.data)
  }
  throw new Error(`${path}: not a PNG or JPEG`)
}

function stripAlpha(width: number, height: number, rgba: Uint8Array | Buffer): RgbImage {
  const rgb = new Uint8Array(width * height * 3)
  for (let p = 0; p < width * height; p++) {
    rgb[p * 3] = rgba[p * 4]
    rgb[p * 3 + 1] = rgba[p * 4 + 1]
    rgb[p * 3 + 2] = rgba[p * 4 + 2]
  }
  return { width, height, rgb }
}

export function encodePng(image: RgbImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height })
  for (let p = 0; p < image.width * image.height; p++) {
    png.data[p * 4] = image.rgb[p * 3]
    png.data[p * 4 + 1] = image.rgb[p * 3 + 1]
    png.data[p * 4 + 2] = image.rgb[p * 3 + 2]
    png.data[p * 4 + 3] = 255
  }
  return PNG.sync.write(png)
}
