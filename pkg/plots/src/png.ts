import { Resvg } from "@resvg/resvg-js";

export function svgToPng(svg: string): Buffer {
  return Buffer.from(new Resvg(svg).render().asPng());
}
