img = open_image("Image1.jpg")
is_silver = query(img, "Does the bench look silver and metallic?")
is_metallic = query(img, "Does the bench look metallic?")
if is_silver == "yes" and is_metallic == "yes":
    answer = "yes"
else:
    answer = "no"
